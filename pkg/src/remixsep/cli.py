"""Command-line surface: refine, eval, theory, synth.

Machine output is JSON; human output is aligned plain text. Every JSON
artifact embeds the effective configuration and seed so a run can be
reproduced from its outputs alone.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import synth, theory
from .audio import AudioBuffer, load_wav, save_wav
from .metrics import (
    MetricError,
    NEG_MSE,
    SI_SNR,
    csdr,
    metric_eval,
    neg_mse,
    parse_metric,
    sdr,
    search_sdr,
    si_snr,
    usdr,
)
from .refine import MixtureProblem, RefinementConfig, RefinementError, refine
from .separators import (
    ContractionModelParams,
    ModelContractError,
    contraction_model,
    estimate_noise_profile,
    external_model,
    identity_model,
    oracle_irm_model,
    spectral_gate_model,
)
from .wire import ExternalProcessError


class CliError(Exception):
    """User-facing failure; printed to stderr, exit status 1."""


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        CliError,
        MetricError,
        RefinementError,
        ModelContractError,
        ExternalProcessError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="remixsep",
        description="Multi-step inference for one-step audio separation models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_refine = sub.add_parser("refine", help="refine mixtures and write traces")
    p_refine.add_argument("input", help="mixture WAV, or a directory (with optional manifest.json)")
    p_refine.add_argument("--model", default=None, help="identity|contraction|spectral_gate|oracle_irm|external")
    p_refine.add_argument("--model-arg", action="append", default=None, metavar="K=V")
    p_refine.add_argument("--search-metric", default=None)
    p_refine.add_argument("--eval-metric", action="append", default=None)
    p_refine.add_argument("--steps", type=int, default=None)
    p_refine.add_argument("--ratios", type=int, default=None)
    p_refine.add_argument("--grid", choices=["inclusive", "open"], default=None)
    p_refine.add_argument("--checkpoints", default=None, help="comma-separated step list")
    p_refine.add_argument("--seed", type=int, default=None)
    p_refine.add_argument("--out", default=None)
    p_refine.add_argument("--trace-format", choices=["jsonl", "csv", "both"], default=None)
    p_refine.add_argument("--reference", default=None, help="reference WAV (single-file mode)")
    p_refine.add_argument("--noise", default=None, help="noise WAV (single-file mode)")
    p_refine.add_argument("--config", default=None, help="JSON config file; flags override it")
    p_refine.set_defaults(func=cmd_refine)

    p_eval = sub.add_parser("eval", help="evaluate metrics on files or directories")
    p_eval.add_argument("reference")
    p_eval.add_argument("estimate")
    p_eval.add_argument("--metric", action="append", default=None)
    p_eval.add_argument("--chunk-seconds", type=float, default=1.0)
    p_eval.set_defaults(func=cmd_eval)

    p_theory = sub.add_parser("theory", help="run a verification suite")
    p_theory.add_argument("suite", choices=["thm1", "thm2", "ddbm", "score", "lipschitz"])
    p_theory.add_argument("--seed", type=int, default=None)
    p_theory.add_argument("--out", default=None)
    p_theory.add_argument("--problems", type=int, default=None)
    p_theory.add_argument("--steps", type=int, default=None)
    p_theory.add_argument("--ratios", type=int, default=None)
    p_theory.add_argument("--over-subtraction", type=float, default=None)
    p_theory.add_argument("--trials", type=int, default=None)
    p_theory.add_argument("--epsilon-r", action="append", type=float, default=None)
    p_theory.add_argument("--alpha", action="append", type=float, default=None)
    p_theory.add_argument("--r-star", type=float, default=None)
    p_theory.add_argument("--lf-override", type=float, default=None)
    p_theory.add_argument("--count", type=int, default=None)
    p_theory.add_argument("--epsilon", type=float, default=None)
    p_theory.add_argument("--sigmas", default=None, help="comma-separated sigma list")
    p_theory.add_argument("--config", default=None)
    p_theory.set_defaults(func=cmd_theory)

    p_synth = sub.add_parser("synth", help="generate synthetic corpora")
    p_synth.add_argument("kind", choices=["tone_noise", "chunk_sdr_fixture"])
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--count", type=int, default=None)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--sr", type=int, default=None)
    p_synth.add_argument("--seconds", type=float, default=None)
    p_synth.add_argument("--channels", type=int, default=None)
    p_synth.add_argument("--songs", type=int, default=None)
    p_synth.add_argument("--chunks", type=int, default=None)
    p_synth.add_argument("--config", default=None)
    p_synth.set_defaults(func=cmd_synth)

    return parser


# ---------------------------------------------------------------------------
# config merging

_REFINE_DEFAULTS = {
    "model": "spectral_gate",
    "model_arg": [],
    "search_metric": "si_snr",
    "eval_metric": ["si_snr"],
    "steps": 20,
    "ratios": 10,
    "grid": "inclusive",
    "checkpoints": "0,1,5,10,20",
    "seed": 0,
    "out": "refine_out",
    "trace_format": "both",
    "reference": None,
    "noise": None,
}

_THEORY_DEFAULTS = {
    "seed": 0,
    "out": None,
    "problems": 100,
    "steps": 20,
    "ratios": 10,
    "over_subtraction": 2.0,
    "trials": 10000,
    "epsilon_r": [0.01, 0.05],
    "alpha": None,
    "r_star": 0.5,
    "lf_override": None,
    "count": 1000,
    "epsilon": 1e-3,
    "sigmas": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
}

_SYNTH_DEFAULTS = {
    "count": 10,
    "seed": 0,
    "sr": 16000,
    "seconds": 1.0,
    "channels": 1,
    "songs": 3,
    "chunks": 3,
}


def _effective_config(args, defaults: dict) -> dict:
    """defaults < --config file < explicit flags; unknown config keys rejected."""
    from_file = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fh:
            from_file = json.load(fh)
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise CliError(f"unknown config keys in {config_path}: {sorted(unknown)}")
    merged = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            merged[key] = cli_value
        elif key in from_file:
            merged[key] = from_file[key]
        else:
            merged[key] = default
    return merged


def _atomic_write_json(payload: dict, path: str):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _atomic_save_wav(buffer: AudioBuffer, path: str, encoding: str = "float32"):
    tmp = f"{path}.tmp-{os.getpid()}"
    save_wav(buffer, tmp, encoding)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# refine

def _parse_model_args(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise CliError(f"--model-arg expects K=V, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _build_model(name: str, margs: dict, problem: MixtureProblem):
    if name == "identity":
        return identity_model()
    if name == "contraction":
        if problem.reference is None:
            raise CliError(f"{problem.label}: contraction model needs a reference")
        alpha = float(margs.get("alpha", 0.5))
        return contraction_model(ContractionModelParams(problem.reference, alpha))
    if name == "spectral_gate":
        over = float(margs.get("over_subtraction", 1.5))
        frame = int(margs.get("frame_size", 1024))
        hop = int(margs.get("hop_size", 512))
        window = margs.get("window", "hann")
        profile_mode = margs.get("profile", "noise" if problem.noise is not None else "input")
        if profile_mode == "noise":
            if problem.noise is None:
                raise CliError(f"{problem.label}: profile=noise needs a noise reference")
            profile = estimate_noise_profile(problem.noise, frame, hop, window)
            return spectral_gate_model(profile, over)
        return spectral_gate_model(None, over, frame_size=frame, hop_size=hop, window=window)
    if name == "oracle_irm":
        if problem.reference is None:
            raise CliError(f"{problem.label}: oracle_irm model needs a reference")
        return oracle_irm_model(problem.reference)
    if name == "external":
        command = margs.get("command")
        if not command:
            raise CliError("external model needs --model-arg command='...'")
        timeout = float(margs.get("timeout", 120.0))
        return external_model(command, timeout=timeout)
    raise CliError(f"unknown model {name!r}")


def _load_problems(args) -> list[MixtureProblem]:
    path = args.input
    if os.path.isdir(path):
        manifest_path = os.path.join(path, "manifest.json")
        problems = []
        if os.path.exists(manifest_path):
            with open(manifest_path) as fh:
                manifest = json.load(fh)
            for entry in manifest.get("problems", []):
                mixture = load_wav(os.path.join(path, entry["mixture"]))
                reference = (
                    load_wav(os.path.join(path, entry["reference"]))
                    if entry.get("reference")
                    else None
                )
                noise = load_wav(os.path.join(path, entry["noise"])) if entry.get("noise") else None
                problems.append(MixtureProblem(mixture, reference, noise, entry["label"]))
        else:
            for name in sorted(os.listdir(path)):
                if name.endswith(".wav"):
                    mixture = load_wav(os.path.join(path, name))
                    problems.append(MixtureProblem(mixture, label=os.path.splitext(name)[0]))
        if not problems:
            raise CliError(f"no problems found under {path}")
        return problems
    mixture = load_wav(path)
    reference = load_wav(args.reference) if getattr(args, "reference", None) else None
    noise = load_wav(args.noise) if getattr(args, "noise", None) else None
    label = os.path.splitext(os.path.basename(path))[0]
    return [MixtureProblem(mixture, reference, noise, label)]


def cmd_refine(args) -> int:
    config = _effective_config(args, _REFINE_DEFAULTS)
    problems = _load_problems(args)
    checkpoints = [int(x) for x in str(config["checkpoints"]).split(",") if x.strip() != ""]
    search_kind = parse_metric(config["search_metric"])
    eval_kinds = [parse_metric(m) for m in config["eval_metric"]]
    margs = _parse_model_args(config["model_arg"])
    run_config = RefinementConfig(
        steps=config["steps"],
        num_ratios=config["ratios"],
        search_metric=search_kind,
        eval_metrics=tuple(eval_kinds),
        grid=config["grid"],
    )

    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    summary = {
        "command": "refine",
        "config": {k: v for k, v in config.items() if k not in ("reference", "noise")},
        "seed": config["seed"],
        "problems": [],
    }
    summary_path = os.path.join(out_dir, "summary.json")
    valid_checkpoints = [c for c in checkpoints if c <= config["steps"]]

    try:
        for problem in problems:
            model = _build_model(config["model"], margs, problem)
            y_final, trace = refine(model, problem, run_config)
            artifacts = {"refined_wav": f"{problem.label}.refined.wav"}
            _atomic_save_wav(y_final, os.path.join(out_dir, artifacts["refined_wav"]))
            if config["trace_format"] in ("jsonl", "both"):
                artifacts["trace_jsonl"] = f"{problem.label}.trace.jsonl"
                trace.write_jsonl(os.path.join(out_dir, artifacts["trace_jsonl"]))
            if config["trace_format"] in ("csv", "both"):
                artifacts["trace_csv"] = f"{problem.label}.trace.csv"
                trace.write_csv(os.path.join(out_dir, artifacts["trace_csv"]))
            model.close()
            summary["problems"].append(
                {
                    "label": problem.label,
                    "artifacts": artifacts,
                    "model_calls": trace.total_model_calls,
                    "checkpoints": {
                        str(c): dict(trace.steps[c].eval_scores) for c in valid_checkpoints
                    },
                    "r_stars": [rec.r_star for rec in trace.steps],
                    "search_scores": trace.chosen_scores,
                }
            )
    finally:
        # Flush whatever finished, even when a later problem fails.
        summary["aggregate"] = _aggregate_checkpoints(summary["problems"], valid_checkpoints)
        _atomic_write_json(summary, summary_path)

    _print_summary_table(summary["aggregate"], valid_checkpoints)
    print(f"wrote {summary_path}")
    return 0


def _aggregate_checkpoints(problem_rows, checkpoints) -> dict:
    aggregate: dict[str, dict[str, float]] = {}
    if not problem_rows:
        return aggregate
    metric_names = list(problem_rows[0]["checkpoints"].get(str(checkpoints[0]), {})) if checkpoints else []
    for metric in metric_names:
        aggregate[metric] = {}
        for c in checkpoints:
            values = [row["checkpoints"][str(c)][metric] for row in problem_rows]
            aggregate[metric][str(c)] = float(np.mean(values))
    return aggregate


def _print_summary_table(aggregate: dict, checkpoints):
    if not aggregate:
        return
    header = ["metric"] + [f"step{c}" for c in checkpoints]
    rows = [
        [name] + [f"{aggregate[name][str(c)]:.4f}" for c in checkpoints] for name in aggregate
    ]
    widths = [max(len(str(row[i])) for row in [header] + rows) for i in range(len(header))]
    for row in [header] + rows:
        print("  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)))


# ---------------------------------------------------------------------------
# eval

_EVAL_AGGREGATES = ("usdr", "csdr")


def _load_song_pairs(reference: str, estimate: str) -> list[tuple[AudioBuffer, AudioBuffer]]:
    if os.path.isdir(reference) != os.path.isdir(estimate):
        raise CliError("reference and estimate must both be files or both be directories")
    if not os.path.isdir(reference):
        return [(load_wav(reference), load_wav(estimate))]
    ref_names = sorted(n for n in os.listdir(reference) if n.endswith(".wav"))
    est_names = sorted(n for n in os.listdir(estimate) if n.endswith(".wav"))
    if len(ref_names) != len(est_names):
        raise CliError(
            f"directory mismatch: {len(ref_names)} reference vs {len(est_names)} estimate files"
        )
    return [
        (load_wav(os.path.join(reference, r)), load_wav(os.path.join(estimate, e)))
        for r, e in zip(ref_names, est_names)
    ]


def _eval_one(name: str, pairs, chunk_seconds: float):
    if name == "usdr":
        per_song = []
        for ref, est in pairs:
            score = sdr(ref, est)
            if score is None:
                raise MetricError("usdr: a song has a silent reference")
            per_song.append(score.value)
        return usdr(per_song)
    if name == "csdr":
        return csdr(pairs, chunk_seconds)
    single = {
        "si_snr": si_snr,
        "sdr": sdr,
        "search_sdr": search_sdr,
        "neg_mse": neg_mse,
    }
    if name in single:
        values = []
        for ref, est in pairs:
            score = single[name](ref, est)
            values.append(None if score is None else score.value)
        return values[0] if len(values) == 1 else {"per_file": values, "mean": _mean_or_none(values)}
    # csdr_component / usdr_component / external go through the dispatch layer.
    kind = parse_metric(name)
    values = []
    for ref, est in pairs:
        problem = MixtureProblem(est, reference=ref)
        values.append(metric_eval(kind, problem, est).value)
    return values[0] if len(values) == 1 else {"per_file": values, "mean": _mean_or_none(values)}


def _mean_or_none(values):
    usable = [v for v in values if v is not None]
    return float(np.mean(usable)) if usable else None


def cmd_eval(args) -> int:
    metric_names = args.metric or ["sdr"]
    pairs = _load_song_pairs(args.reference, args.estimate)
    for ref, est in pairs:
        ref.require_same_shape(est, "eval inputs")
    result = {name: _eval_one(name, pairs, args.chunk_seconds) for name in metric_names}
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# theory suites

def cmd_theory(args) -> int:
    config = _effective_config(args, _THEORY_DEFAULTS)
    suite = args.suite
    runner = {
        "thm1": _suite_thm1,
        "thm2": _suite_thm2,
        "ddbm": _suite_ddbm,
        "score": _suite_score,
        "lipschitz": _suite_lipschitz,
    }[suite]
    report = runner(config)
    report["command"] = f"theory {suite}"
    report["config"] = config
    out_path = config["out"] or f"theory_{suite}.json"
    _atomic_write_json(report, out_path)
    verdict = "PASS" if report["passed"] else "FAIL"
    print(f"theory {suite}: {verdict} ({out_path})")
    if not report["passed"]:
        print(f"violated: {report.get('failure', 'see report')}", file=sys.stderr)
    return 0 if report["passed"] else 1


def _suite_thm1(config: dict) -> dict:
    problems = synth.tone_noise_corpus(config["problems"], config["seed"])
    run_config = RefinementConfig(
        steps=config["steps"], num_ratios=config["ratios"], search_metric=SI_SNR
    )
    audits = []
    dominance = 0
    failures = []
    for problem in problems:
        profile = estimate_noise_profile(problem.noise)
        model = spectral_gate_model(profile, config["over_subtraction"])
        _, trace = refine(model, problem, run_config)
        audit = theory.monotonicity_audit(trace)
        audits.append(audit)
        if audit["statistics"]["largest_delta_step"] == 1:
            dominance += 1
        if not audit["passed"]:
            failures.append({"label": problem.label, "violations": audit["violations"]})
    passed = not failures
    return {
        "suite": "thm1",
        "seed": config["seed"],
        "statistics": {
            "problems": len(problems),
            "lower_bound_violations": len(failures),
            "first_step_dominance_fraction": dominance / len(problems) if problems else None,
        },
        "failures": failures,
        "failure": "lower-bound invariant violated" if failures else None,
        "passed": passed,
    }


def _suite_thm2(config: dict) -> dict:
    alphas = config["alpha"] or [0.3, 0.9]
    reports = []
    passed = True
    failure = None
    for i, alpha in enumerate(alphas):
        for j, eps in enumerate(config["epsilon_r"]):
            problem = synth.tone_noise_problem(config["seed"], 1000 + i)
            model = contraction_model(ContractionModelParams(problem.reference, alpha))
            lipschitz_f = config["lf_override"] if config["lf_override"] is not None else alpha
            sim = theory.BoundSimConfig(
                epsilon_r=eps,
                trials=config["trials"],
                model=model,
                metric=NEG_MSE,
                problem=problem,
                r_star=config["r_star"],
                lipschitz_f=lipschitz_f,
                seed=config["seed"] + 7 * i + j,
            )
            report = theory.simulate_error_bound(sim)
            reports.append(report)
            if not report["passed"]:
                passed = False
                failure = (
                    f"variance bound violated (alpha={alpha}, epsilon_r={eps}): "
                    f"{report['violation']}"
                )
    return {
        "suite": "thm2",
        "seed": config["seed"],
        "runs": reports,
        "statistics": {"configurations": len(reports)},
        "failure": failure,
        "passed": passed,
    }


def _random_buffer(rng, channels=1, n=4096, sample_rate=16000, scale=0.3) -> AudioBuffer:
    return AudioBuffer._from_owned(scale * rng.standard_normal((channels, n)), sample_rate)


def _suite_ddbm(config: dict) -> dict:
    rng = np.random.default_rng(config["seed"])
    pairs = []
    sigmas = []
    for _ in range(config["count"]):
        pairs.append((_random_buffer(rng), _random_buffer(rng)))
        sigmas.append(float(rng.uniform(0.05, 1.0)))
    zeros = AudioBuffer._from_owned(np.zeros_like(pairs[0][0].samples), pairs[0][0].sample_rate)
    model = contraction_model(ContractionModelParams(zeros, 0.9))

    batch = theory.BridgeBatch(pairs, sigmas, epsilon=config["epsilon"])
    report = theory.ddbm_loss_equivalence(batch, model)

    unit_batch = theory.BridgeBatch(
        pairs, sigmas, epsilon=config["epsilon"], weighting=lambda s: 1.0
    )
    unit_report = theory.ddbm_loss_equivalence(unit_batch, model)
    expected = np.asarray([1.0 / (s * s) for s in sigmas])
    actual = np.asarray(unit_report["per_sample_ratios"])
    counterfactual_dev = float(np.max(np.abs(actual / expected - 1.0)))

    passed = report["passed"] and counterfactual_dev <= 1e-10
    return {
        "suite": "ddbm",
        "seed": config["seed"],
        "identity": {k: v for k, v in report.items() if k != "per_sample_ratios"},
        "counterfactual": {"weighting": "w(sigma)=1", "max_rel_dev_from_sigma^-2": counterfactual_dev},
        "statistics": {"count": config["count"], "epsilon": config["epsilon"]},
        "failure": None if passed else "bridge-loss identity violated",
        "passed": passed,
    }


def _suite_score(config: dict) -> dict:
    rng = np.random.default_rng(config["seed"])
    p = _random_buffer(rng)
    q = _random_buffer(rng)
    sigmas = [float(s) for s in str(config["sigmas"]).split(",")]
    model = contraction_model(ContractionModelParams(p, 0.0))  # oracle: p_hat(x) = p
    curve = []
    passed = True
    for sigma in sigmas:
        report = theory.score_check(p, q, sigma, config["epsilon"], model, seed=config["seed"])
        curve.append({"sigma": sigma, **report["statistics"]})
        passed = passed and report["passed"]
    return {
        "suite": "score",
        "seed": config["seed"],
        "curve": curve,
        "statistics": {"sigmas": sigmas, "epsilon": config["epsilon"]},
        "failure": None if passed else "score property violated",
        "passed": passed,
    }


def _suite_lipschitz(config: dict) -> dict:
    rng = np.random.default_rng(config["seed"])
    anchor = _random_buffer(rng)
    checks = []

    identity = identity_model()
    est = theory.estimate_lipschitz(identity, [anchor], 0.05, 4, seed=config["seed"])
    checks.append(
        {"target": "identity", "expected": 1.0, "estimate": est.constant, "ok": abs(est.constant - 1.0) <= 1e-9}
    )

    alphas = config["alpha"] or [0.3, 0.5, 0.9]
    target = _random_buffer(rng)
    for alpha in alphas:
        model = contraction_model(ContractionModelParams(target, alpha))
        est = theory.estimate_lipschitz(model, [anchor], 0.05, 4, seed=config["seed"])
        checks.append(
            {
                "target": f"contraction(alpha={alpha})",
                "expected": alpha,
                "estimate": est.constant,
                "ok": abs(est.constant - alpha) <= 1e-6,
            }
        )

    # neg_mse near a fixed reference: Lipschitz constant 2*max rms(y - p)
    # in the RMS-distance convention; anchors laid along one ray so the
    # pairwise secants see the gradient direction.
    p = _random_buffer(rng)
    direction = rng.standard_normal(p.samples.shape)
    direction /= np.sqrt(np.mean(direction**2))
    scales = [0.90, 0.95, 0.98, 1.0]
    anchors = [
        AudioBuffer._from_owned(p.samples + s * 0.5 * direction, p.sample_rate) for s in scales
    ]

    def metric_fn(buffer: AudioBuffer) -> float:
        return neg_mse(p, buffer).value

    est = theory.estimate_lipschitz(metric_fn, anchors, 1e-4, 2, seed=config["seed"])
    max_rms = max(theory._rms(np.ascontiguousarray(a.samples - p.samples)) for a in anchors)
    expected = 2.0 * max_rms
    checks.append(
        {
            "target": "neg_mse near reference",
            "expected": expected,
            "estimate": est.constant,
            "ok": abs(est.constant - expected) <= 0.05 * expected,
        }
    )

    passed = all(c["ok"] for c in checks)
    return {
        "suite": "lipschitz",
        "seed": config["seed"],
        "checks": checks,
        "statistics": {"count": len(checks)},
        "failure": None if passed else "a Lipschitz estimate missed its analytic value",
        "passed": passed,
    }


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args) -> int:
    config = _effective_config(args, _SYNTH_DEFAULTS)
    out_dir = args.out
    if args.kind == "tone_noise":
        problems = synth.tone_noise_corpus(
            config["count"], config["seed"], config["sr"], config["seconds"], config["channels"]
        )
        manifest = synth.write_tone_noise_corpus(problems, out_dir, config["seed"], config)
        print(f"wrote {len(manifest['problems'])} problems to {out_dir}")
        return 0
    pairs, manifest = synth.chunk_sdr_fixture(
        songs=config["songs"],
        chunks_per_song=config["chunks"],
        seed=config["seed"],
        sample_rate=config["sr"],
    )
    manifest["config"] = config
    synth.write_chunk_sdr_fixture(pairs, manifest, out_dir)
    print(f"wrote {len(manifest['songs'])} songs to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
