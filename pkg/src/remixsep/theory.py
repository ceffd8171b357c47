"""Numerical verification of the refinement bounds and the bridge-model identities.

Conventions: distances between buffers use the RMS norm (square root of
the mean square), matching the mean-square reduction used for the
variance bound's distance term. Lipschitz constants are secant maxima
over probed point pairs, i.e. certified lower bounds on the true local
constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .audio import AudioBuffer
from .metrics import MetricKind, metric_eval
from .refine import MixtureProblem, RefinementTrace, blend


class TheoryLabError(Exception):
    """A verification harness could not be evaluated."""


def _rms(arr: np.ndarray) -> float:
    return math.sqrt(kernels.mean_sq(arr))


def _rms_diff(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(kernels.mean_sq_diff(a, b))


# ---------------------------------------------------------------------------
# Lipschitz estimation

@dataclass(frozen=True)
class LipschitzEstimate:
    """Max finite-difference ratio over probed pairs; a lower bound on the true constant."""

    constant: float
    probe_count: int
    max_ratio_location: str


def estimate_lipschitz(
    g: Callable[[AudioBuffer], "AudioBuffer | float"],
    anchors,
    perturbation_scale: float,
    probes_per_anchor: int,
    seed: int = 0,
) -> LipschitzEstimate:
    """Empirical local Lipschitz constant of g via finite-difference ratios.

    Gaussian probes are scattered around each anchor and the ratio
    |g(a)-g(b)| / rms(a-b) is maximized over *all* pairs of evaluated
    points (anchor-anchor pairs included, so callers can lay anchors
    along a known steep direction).
    """
    anchors = list(anchors)
    if not anchors:
        raise ValueError("estimate_lipschitz needs at least one anchor")
    if perturbation_scale <= 0:
        raise ValueError(f"perturbation_scale must be > 0, got {perturbation_scale}")

    rng = np.random.default_rng(seed)
    points: list[AudioBuffer] = []
    labels: list[str] = []
    for i, anchor in enumerate(anchors):
        points.append(anchor)
        labels.append(f"anchor{i}")
        for j in range(probes_per_anchor):
            noise = perturbation_scale * rng.standard_normal(anchor.samples.shape)
            points.append(AudioBuffer._from_owned(anchor.samples + noise, anchor.sample_rate))
            labels.append(f"anchor{i}.probe{j}")

    outputs = []
    for label, point in zip(labels, points):
        try:
            outputs.append(g(point))
        except Exception as exc:
            raise TheoryLabError(f"probe evaluation failed at {label}: {exc}") from exc

    best = 0.0
    location = "no separated pair"
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            dist = _rms_diff(points[i].samples, points[j].samples)
            if dist < 1e-30:
                continue
            out_i, out_j = outputs[i], outputs[j]
            if isinstance(out_i, AudioBuffer):
                diff = _rms_diff(out_i.samples, out_j.samples)
            else:
                diff = abs(float(out_i) - float(out_j))
            ratio = diff / dist
            if ratio > best:
                best = ratio
                location = f"{labels[i]} vs {labels[j]}"
    return LipschitzEstimate(best, len(points), location)


# ---------------------------------------------------------------------------
# Variance bound (metric uncertainty propagated through the blend step)

@dataclass
class BoundSimConfig:
    """Monte-Carlo setup for the step-variance bound check.

    lipschitz_f injects an exactly-known model constant (e.g. the
    contraction alpha); when None it is estimated along the blend path.
    y_prev defaults to the model's one-step output on the mixture.
    """

    epsilon_r: float
    trials: int
    model: object
    metric: MetricKind
    problem: MixtureProblem
    r_star: float
    y_prev: AudioBuffer | None = None
    lipschitz_f: float | None = None
    seed: int = 0
    probe_points: int = 33

    def __post_init__(self):
        # The nominal invariant is epsilon_r > 0; zero is additionally
        # allowed and degenerates to the exact no-noise case.
        if self.epsilon_r < 0:
            raise ValueError(f"epsilon_r must be >= 0, got {self.epsilon_r}")
        if self.trials < 100:
            raise ValueError(f"trials must be >= 100 for reported statistics, got {self.trials}")
        if not 0.0 <= self.r_star <= 1.0:
            raise ValueError(f"r_star must be in [0, 1], got {self.r_star}")
        if self.probe_points < 2:
            raise ValueError("probe_points must be >= 2")


def simulate_error_bound(config: BoundSimConfig) -> dict:
    """Draw noisy ratios around r*, measure Var of the metric, compare to the bound.

    The bound is Lf^2 * Lr^2 * meansq(x0 - y_prev) * epsilon_r^2 with Lr
    (and Lf unless supplied) estimated over the blend path for
    r in [r*-4eps, r*+4eps] clipped to [0, 1]. The comparison is
    deterministic: a violation means one of the constants is invalid over
    the sampled range, and the report names the suspect.

    The Gaussian draws are moment-standardized (empirical mean exactly r*,
    empirical variance exactly epsilon_r^2 before clipping) so estimator
    sampling noise cannot cross the bound; for a map that is C-Lipschitz
    over the sampled range, the empirical score variance then provably
    stays below C^2 * epsilon_r^2 in every run.
    """
    model = config.model
    problem = config.problem
    x0 = problem.mixture
    y_prev = config.y_prev if config.y_prev is not None else model(x0)

    rng = np.random.default_rng(config.seed)
    z = rng.standard_normal(config.trials)
    z = (z - z.mean()) / z.std(ddof=1)
    draws = config.r_star + config.epsilon_r * z
    ratios = np.clip(draws, 0.0, 1.0)
    clip_fraction = float(np.mean(draws != ratios))

    scores = np.empty(config.trials)
    for i, r in enumerate(ratios):
        scores[i] = metric_eval(config.metric, problem, model(blend(x0, y_prev, float(r)))).value
    # Shift before the variance so bit-identical samples (epsilon_r = 0)
    # yield exactly zero instead of mean-rounding noise.
    empirical_var = float(np.var(scores - scores[0], ddof=1))

    lo = max(0.0, config.r_star - 4.0 * config.epsilon_r)
    hi = min(1.0, config.r_star + 4.0 * config.epsilon_r)
    probes = np.linspace(lo, hi, config.probe_points)
    xs = [blend(x0, y_prev, float(r)) for r in probes]
    ys = [model(x) for x in xs]
    rs = [metric_eval(config.metric, problem, y).value for y in ys]

    lipschitz_metric = 0.0
    lipschitz_model_est = 0.0
    for i in range(len(probes)):
        for j in range(i + 1, len(probes)):
            dy = _rms_diff(ys[i].samples, ys[j].samples)
            dx = _rms_diff(xs[i].samples, xs[j].samples)
            if dx > 1e-30:
                lipschitz_model_est = max(lipschitz_model_est, dy / dx)
            if dy > 1e-30:
                lipschitz_metric = max(lipschitz_metric, abs(rs[i] - rs[j]) / dy)

    supplied = config.lipschitz_f is not None
    lipschitz_model = config.lipschitz_f if supplied else lipschitz_model_est
    mean_sq_distance = kernels.mean_sq_diff(x0.samples, y_prev.samples)
    bound = lipschitz_model**2 * lipschitz_metric**2 * mean_sq_distance * config.epsilon_r**2

    passed = empirical_var <= bound
    violation = None
    if not passed:
        outside = float(np.mean((ratios < lo) | (ratios > hi)))
        if supplied:
            suspect = "lipschitz_f"
            detail = (
                f"supplied model constant L_f={lipschitz_model:.6g} is below the "
                f"path estimate {lipschitz_model_est:.6g}"
                if lipschitz_model < lipschitz_model_est
                else f"supplied model constant L_f={lipschitz_model:.6g} does not cover the sampled range"
            )
        elif outside > 0:
            suspect = "lipschitz_r"
            detail = (
                f"{outside:.2%} of sampled ratios fell outside the probe window "
                f"[{lo:.4g}, {hi:.4g}] over which L_r was estimated"
            )
        else:
            suspect = "estimated local constants"
            detail = "estimated L_f/L_r do not cover the sampled range; increase probe_points"
        violation = {"suspect": suspect, "detail": detail}

    return {
        "suite": "error_bound",
        "inputs": {
            "epsilon_r": config.epsilon_r,
            "trials": config.trials,
            "r_star": config.r_star,
            "model": model.describe() if hasattr(model, "describe") else str(model),
            "metric": str(config.metric),
            "problem": problem.label,
            "probe_window": [lo, hi],
            "probe_points": config.probe_points,
        },
        "seed": config.seed,
        "statistics": {
            "empirical_variance": empirical_var,
            "mean_score": float(np.mean(scores)),
            "clip_fraction": clip_fraction,
        },
        "constants": {
            "lipschitz_f": lipschitz_model,
            "lipschitz_f_source": "supplied" if supplied else "estimated",
            "lipschitz_f_path_estimate": lipschitz_model_est,
            "lipschitz_r": lipschitz_metric,
        },
        "bound": {"mean_sq_distance": mean_sq_distance, "value": bound},
        "passed": passed,
        "violation": violation,
    }


# ---------------------------------------------------------------------------
# Bridge-model equivalence

@dataclass
class BridgeBatch:
    """(p, q, sigma) triples plus smoothing and weighting for the loss identity."""

    pairs: list
    sigmas: list
    epsilon: float = 1e-3
    weighting: "str | Callable[[float], float]" = "sigma_squared"

    def __post_init__(self):
        if len(self.pairs) != len(self.sigmas):
            raise ValueError("pairs and sigmas must align one-to-one")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0 (sigma=0 smoothing is singular)")
        for s in self.sigmas:
            if not 0.0 < s <= 1.0:
                raise ValueError(f"sigma must be in (0, 1], got {s}")


def _bridge_point(p: AudioBuffer, q: AudioBuffer, sigma: float) -> np.ndarray:
    return sigma * p.samples + (1.0 - sigma) * q.samples


def smoothed_bridge_score(
    x: AudioBuffer, p: AudioBuffer, q: AudioBuffer, sigma: float, epsilon: float
) -> np.ndarray:
    """Analytic score of the Gaussian-smoothed bridge at x: -(x - interp)/eps^2."""
    return -(x.samples - _bridge_point(p, q, sigma)) / (epsilon * epsilon)


def ddbm_loss_equivalence(batch: BridgeBatch, model) -> dict:
    """Check the bridge-loss identity: with w(sigma)=sigma^2, the score-matching
    integrand equals (1/eps^4)*|y - p_hat(y)|^2 exactly.

    The analytic score vanishes at the interpolation point, so the ratio of
    the two sides is an algebraic identity (1 within 1e-10). Any other
    weighting deviates by exactly w(sigma)/sigma^2.
    """
    eps = batch.epsilon
    eps4 = eps**4
    ratios = []
    zero_loss = 0
    for (p, q), sigma in zip(batch.pairs, batch.sigmas):
        p.require_same_shape(q, "bridge pair")
        y = AudioBuffer._from_owned(_bridge_point(p, q, sigma), p.sample_rate)
        p_hat = model(y)
        if batch.weighting == "sigma_squared":
            w = sigma * sigma
        else:
            w = float(batch.weighting(sigma))
        score_param = (y.samples - p_hat.samples) / (eps * eps * sigma)
        score_analytic = smoothed_bridge_score(y, p, q, sigma, eps)
        integrand = w * kernels.mean_sq(np.ascontiguousarray(score_param - score_analytic))
        sep_term = kernels.mean_sq_diff(y.samples, p_hat.samples) / eps4
        if sep_term < 1e-300:
            zero_loss += 1
            ratios.append(1.0 if batch.weighting == "sigma_squared" else float("nan"))
            continue
        ratios.append(integrand / sep_term)

    arr = np.asarray(ratios)
    finite = arr[np.isfinite(arr)]
    max_dev = float(np.max(np.abs(finite - 1.0))) if finite.size else 0.0
    weighting_name = (
        "sigma_squared" if batch.weighting == "sigma_squared" else "custom"
    )
    return {
        "suite": "ddbm_equivalence",
        "inputs": {
            "count": len(batch.pairs),
            "epsilon": eps,
            "weighting": weighting_name,
            "model": model.describe() if hasattr(model, "describe") else str(model),
        },
        "statistics": {
            "zero_loss_count": zero_loss,
            "ratio_min": float(np.min(finite)) if finite.size else None,
            "ratio_max": float(np.max(finite)) if finite.size else None,
            "max_abs_deviation_from_1": max_dev,
        },
        "per_sample_ratios": [float(r) for r in ratios],
        "passed": weighting_name != "sigma_squared" or max_dev <= 1e-10,
    }


def score_check(
    p: AudioBuffer,
    q: AudioBuffer,
    sigma: float,
    epsilon: float,
    model,
    displacement: np.ndarray | None = None,
    seed: int = 0,
) -> dict:
    """Verify the smoothed-bridge score properties at one sigma.

    Checks: the score at the interpolation point is the zero vector; a
    point displaced by d scores -d/eps^2; and the estimate-shift
    approximation p_hat(x) - x ~ sigma*(p - x) has residual
    (1-sigma)^2 * rms(p-q) for the oracle estimate p_hat = p.
    """
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"sigma must be in (0, 1], got {sigma}")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    p.require_same_shape(q, "score_check inputs")

    y = AudioBuffer._from_owned(_bridge_point(p, q, sigma), p.sample_rate)
    at_bridge = smoothed_bridge_score(y, p, q, sigma, epsilon)
    bridge_max_abs = float(np.max(np.abs(at_bridge))) if at_bridge.size else 0.0

    if displacement is None:
        rng = np.random.default_rng(seed)
        displacement = 0.1 * rng.standard_normal(p.samples.shape)
    x = AudioBuffer._from_owned(y.samples + displacement, p.sample_rate)
    displaced = smoothed_bridge_score(x, p, q, sigma, epsilon)
    expected = -displacement / (epsilon * epsilon)
    denom = _rms(expected)
    displaced_rel_error = (
        _rms(np.ascontiguousarray(displaced - expected)) / denom if denom > 0 else 0.0
    )

    p_hat = model(y)
    model_residual = _rms(
        np.ascontiguousarray((p_hat.samples - y.samples) - sigma * (p.samples - y.samples))
    )
    oracle_residual = (1.0 - sigma) * _rms(np.ascontiguousarray(p.samples - y.samples))
    closed_form = (1.0 - sigma) ** 2 * _rms_diff(p.samples, q.samples)

    return {
        "suite": "score_check",
        "inputs": {
            "sigma": sigma,
            "epsilon": epsilon,
            "model": model.describe() if hasattr(model, "describe") else str(model),
        },
        "seed": seed,
        "statistics": {
            "score_at_bridge_max_abs": bridge_max_abs,
            "displaced_score_rel_error": displaced_rel_error,
            "approx_residual_model": model_residual,
            "approx_residual_oracle": oracle_residual,
            "approx_residual_closed_form": closed_form,
        },
        "passed": bridge_max_abs == 0.0 and displaced_rel_error <= 1e-10,
    }


# ---------------------------------------------------------------------------
# Trace audit

def monotonicity_audit(trace: RefinementTrace, tolerance: float = 1e-9) -> dict:
    """Check the step-0 lower bound and per-step maximality on a finished trace.

    Monotonicity across steps is reported (per-step deltas, largest delta)
    but never asserted; only the lower bound against step 0 is.
    """
    if not trace.steps:
        raise TheoryLabError("monotonicity_audit needs a non-empty trace")
    scores = trace.chosen_scores
    baseline = scores[0]
    violations = [
        {"step": rec.step, "score": rec.search_score, "deficit": baseline - rec.search_score}
        for rec in trace.steps
        if rec.search_score < baseline - tolerance
    ]
    max_mismatch = [
        rec.step
        for rec in trace.steps
        if rec.candidates is not None
        and rec.search_score != max(score for _, score in rec.candidates)
    ]
    deltas = [scores[t] - scores[t - 1] for t in range(1, len(scores))]
    largest = (int(np.argmax(deltas)) + 1) if deltas else None
    return {
        "suite": "monotonicity_audit",
        "inputs": {"label": trace.label, "search_metric": trace.search_metric, "tolerance": tolerance},
        "statistics": {
            "num_steps": len(trace.steps) - 1,
            "baseline_score": baseline,
            "final_score": scores[-1],
            "deltas": deltas,
            "largest_delta_step": largest,
        },
        "violations": violations,
        "per_step_max_violations": max_mismatch,
        "lower_bound_holds": not violations,
        "passed": not violations and not max_mismatch,
    }
