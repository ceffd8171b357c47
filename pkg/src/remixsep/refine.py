"""Iterative blend/search/select refinement.

One refinement step blends the original mixture with the previous
estimate at K candidate ratios, runs the one-step separator on every
blend, scores each output with the search metric, and keeps the argmax.
Because an inclusive ratio grid always contains r = 1, the separator's
plain one-step output f(x0) is one of the candidates at every step, so
the chosen search score can never drop below the step-0 score. That
lower bound is exact and is asserted by the theory suite; monotonicity
across steps is *not* guaranteed and not asserted.

The winning candidate's separator output is reused as the step result
rather than recomputed; for deterministic models this is observationally
identical and saves one model call per step, making the total call count
exactly 1 + T*K.
"""

from __future__ import annotations

import csv
import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import kernels
from .audio import AudioBuffer
from .metrics import MetricKind, MissingReferenceError, SI_SNR, metric_eval


class RefinementError(Exception):
    """A refinement step failed; the message names the step and candidate."""


@dataclass(frozen=True)
class MixtureProblem:
    """A mixture with optional clean/noise references; the unit of refinement."""

    mixture: AudioBuffer
    reference: AudioBuffer | None = None
    noise: AudioBuffer | None = None
    label: str = ""

    def __post_init__(self):
        if self.reference is not None:
            self.mixture.require_same_shape(self.reference, "mixture vs reference")
        if self.noise is not None:
            self.mixture.require_same_shape(self.noise, "mixture vs noise")


@dataclass(frozen=True)
class RefinementConfig:
    """The (T, K, metric, grid, tie policy) contract for one run."""

    steps: int = 20
    num_ratios: int = 10
    search_metric: MetricKind = SI_SNR
    eval_metrics: tuple[MetricKind, ...] = ()
    grid: str = "inclusive"
    tie_policy: str = "prefer_larger_r"
    record_candidates: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.steps >= 1 and self.num_ratios < 2:
            raise ValueError(f"num_ratios must be >= 2 when steps >= 1, got {self.num_ratios}")
        if self.grid not in ("inclusive", "open"):
            raise ValueError(f"grid must be 'inclusive' or 'open', got {self.grid!r}")
        if self.tie_policy != "prefer_larger_r":
            raise ValueError(f"unsupported tie_policy {self.tie_policy!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "eval_metrics", tuple(self.eval_metrics))


@dataclass(frozen=True)
class StepRecord:
    step: int
    r_star: float
    search_score: float
    candidates: tuple[tuple[float, float], ...] | None
    eval_scores: dict[str, float]
    wall_time_s: float
    model_calls: int


@dataclass
class RefinementTrace:
    """Per-step record of chosen ratios, candidate scores, and eval metrics."""

    steps: list[StepRecord] = field(default_factory=list)
    search_metric: str = ""
    label: str = ""

    @property
    def total_model_calls(self) -> int:
        return sum(rec.model_calls for rec in self.steps)

    @property
    def chosen_scores(self) -> list[float]:
        return [rec.search_score for rec in self.steps]

    def records(self) -> list[dict]:
        out = []
        for rec in self.steps:
            out.append(
                {
                    "step": rec.step,
                    "r_star": rec.r_star,
                    "search_score": rec.search_score,
                    "candidates": None
                    if rec.candidates is None
                    else [[r, s] for r, s in rec.candidates],
                    "eval": dict(rec.eval_scores),
                    "wall_time_s": rec.wall_time_s,
                    "model_calls": rec.model_calls,
                }
            )
        return out

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for record in self.records():
                fh.write(json.dumps(record) + "\n")

    def write_csv(self, path):
        eval_names: list[str] = []
        for rec in self.steps:
            for name in rec.eval_scores:
                if name not in eval_names:
                    eval_names.append(name)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "r_star", "search_score"] + [f"eval_{n}" for n in eval_names])
            for rec in self.steps:
                row = [rec.step, repr(rec.r_star), repr(rec.search_score)]
                row += [
                    repr(rec.eval_scores[n]) if n in rec.eval_scores else ""
                    for n in eval_names
                ]
                writer.writerow(row)


def blend(x0: AudioBuffer, y_prev: AudioBuffer, r: float) -> AudioBuffer:
    """Convex blend r*x0 + (1-r)*y_prev; r=1 reproduces x0 bit-exactly."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"blend ratio must be in [0, 1], got {r}")
    x0.require_same_shape(y_prev, "blend inputs")
    out = kernels.blend_arrays(x0.samples, y_prev.samples, float(r))
    return AudioBuffer._from_owned(out, x0.sample_rate)


def ratio_grid(num_ratios: int, grid: str = "inclusive") -> list[float]:
    """Evenly spaced candidate ratios in [0, 1].

    Inclusive mode contains both endpoints (r=1 is what makes the
    lower-bound guarantee hold); open mode spaces K points strictly inside.
    """
    if grid == "inclusive":
        if num_ratios < 2:
            raise ValueError(f"inclusive grid needs num_ratios >= 2, got {num_ratios}")
        return [i / (num_ratios - 1) for i in range(num_ratios)]
    if grid == "open":
        if num_ratios < 1:
            raise ValueError(f"open grid needs num_ratios >= 1, got {num_ratios}")
        return [(i + 1) / (num_ratios + 1) for i in range(num_ratios)]
    raise ValueError(f"grid must be 'inclusive' or 'open', got {grid!r}")


def _score_value(kind: MetricKind, problem: MixtureProblem, estimate: AudioBuffer) -> float:
    value = metric_eval(kind, problem, estimate).value
    # Degenerate candidates must never win the argmax.
    return value if math.isfinite(value) else -math.inf


def select_candidate(
    model,
    search_metric: MetricKind,
    problem: MixtureProblem,
    y_prev: AudioBuffer,
    ratios,
    workers: int = 1,
):
    """Evaluate f(blend(x0, y_prev, r)) for every r; return the argmax.

    Returns (r_star, y_next, scores) where y_next is the winning
    candidate's separator output (reused, not recomputed). Ties go to the
    larger ratio. Non-finite scores count as -inf.
    """
    ratios = list(ratios)
    if not ratios:
        raise ValueError("select_candidate needs at least one ratio")

    def evaluate(item):
        k, r = item
        try:
            candidate = model(blend(problem.mixture, y_prev, r))
            return candidate, _score_value(search_metric, problem, candidate)
        except Exception as exc:
            raise RefinementError(f"candidate k={k} (r={r:.6g}) failed: {exc}") from exc

    items = list(enumerate(ratios))
    if workers > 1 and getattr(model, "parallel_safe", False):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, items))
    else:
        results = [evaluate(item) for item in items]

    best_idx = 0
    best_score = -math.inf
    for k, (_, score) in enumerate(results):
        # >= with ascending ratios implements the larger-r tie policy.
        if score >= best_score:
            best_idx, best_score = k, score
    scores = [score for _, score in results]
    return ratios[best_idx], results[best_idx][0], scores


class _CountingModel:
    """Counts invocations of the wrapped model; thread-safe."""

    def __init__(self, model):
        self._model = model
        self.parallel_safe = getattr(model, "parallel_safe", False)
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, mixture: AudioBuffer) -> AudioBuffer:
        with self._lock:
            self.calls += 1
        return self._model(mixture)


def refine(model, problem: MixtureProblem, config: RefinementConfig):
    """Run Algorithm-style multi-step refinement; returns (y_final, trace).

    Step 0 records the one-step baseline y0 = f(x0) (with ratio 1 by
    convention); steps 1..T run the candidate search against the previous
    step's output. The trace always has steps+1 records.
    """
    if config.search_metric.intrusive and problem.reference is None:
        raise MissingReferenceError(
            f"search metric {config.search_metric} needs problem.reference"
        )

    counting = _CountingModel(model)
    trace = RefinementTrace(search_metric=str(config.search_metric), label=problem.label)

    def evals(estimate: AudioBuffer) -> dict[str, float]:
        return {str(kind): metric_eval(kind, problem, estimate).value for kind in config.eval_metrics}

    started = time.perf_counter()
    try:
        y = counting(problem.mixture)
        score0 = _score_value(config.search_metric, problem, y)
    except Exception as exc:
        raise RefinementError(f"step 0: {exc}") from exc
    trace.steps.append(
        StepRecord(
            step=0,
            r_star=1.0,
            search_score=score0,
            candidates=((1.0, score0),) if config.record_candidates else None,
            eval_scores=evals(y),
            wall_time_s=time.perf_counter() - started,
            model_calls=1,
        )
    )

    ratios = ratio_grid(config.num_ratios, config.grid) if config.steps else []
    for t in range(1, config.steps + 1):
        started = time.perf_counter()
        calls_before = counting.calls
        try:
            r_star, y, scores = select_candidate(
                counting, config.search_metric, problem, y, ratios, workers=config.workers
            )
        except RefinementError as exc:
            raise RefinementError(f"step {t}: {exc}") from exc
        trace.steps.append(
            StepRecord(
                step=t,
                r_star=r_star,
                search_score=max(scores),
                candidates=tuple(zip(ratios, scores)) if config.record_candidates else None,
                eval_scores=evals(y),
                wall_time_s=time.perf_counter() - started,
                model_calls=counting.calls - calls_before,
            )
        )
    return y, trace
