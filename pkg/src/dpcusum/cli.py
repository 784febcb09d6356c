"""Command-line front end.

Every command resolves to a fully explicit effective config that is echoed
into its artifact, so any artifact can be reproduced from itself.  JSON
artifacts are byte-stable across reruns; CSV artifacts differ only in the
single leading comment line that carries the timestamp.

Exit codes: 0 success, 2 validation error, 3 failed run-level assertion
(privacy audit failure, censoring overflow).  Errors are emitted as a single
JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .calibrate import default_heatmap_axes, heatmap_grid, solve_threshold
from .detectors import CUSUM, DetectorConfig, run_to_stop
from .errors import ConfigError, InputError
from .harness import (
    CENSOR_FAIL_FRACTION,
    DEFAULT_HORIZON,
    DEFAULT_TRIALS,
    LANE_ARL,
    LANE_WADD,
    _spec_configs,
    _trial_stream,
    compare_detectors,
    estimate_arl,
    estimate_wadd,
    privacy_audit,
    sweep_delay_vs_arl,
    sweep_rows_to_csv,
)
from .models import ModelPair, sensitivity

HEATMAP_CSV_HEADER = "mu,epsilon,delta,a_delta,h,on_boundary"


class CheckFailure(RuntimeError):
    """A run-level check failed: exit 3, not a usage problem."""


def _fail(message: str) -> None:
    raise ConfigError(message)


def _utc_stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None


def _write_csv(path: str | None, command: str, effective: dict, lines: list[str]) -> None:
    # the timestamp lives only in this comment line; everything below it is
    # a pure function of the effective config
    head = "# " + json.dumps(
        {"command": command, "generated_at": _utc_stamp(), "config": effective},
        sort_keys=True,
        separators=(",", ":"),
    )
    _emit(path, "\n".join([head] + lines) + "\n")


def _write_json(path: str | None, obj: dict) -> None:
    _emit(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
    except FileNotFoundError:
        _fail(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(loaded, dict):
        _fail(f"config file {path} must hold a JSON object")
    return loaded


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        _fail(f"unexpected {where} keys: {sorted(extra)}")


def _resolve_seed(args, cfg: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "seed" in cfg:
        seed = cfg["seed"]
        if not isinstance(seed, int) or seed < 0:
            _fail(f"config seed must be a nonnegative integer, got {seed!r}")
        return seed
    env = os.environ.get("DPCUSUM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            _fail(f"DPCUSUM_SEED must be an integer, got {env!r}")
    _fail("no seed given: pass --seed, put 'seed' in the config, or set DPCUSUM_SEED")


def _resolve_trials(args, cfg: dict) -> int:
    trials = args.trials if getattr(args, "trials", None) is not None else cfg.get("trials")
    if trials is None:
        trials = DEFAULT_TRIALS
    if not isinstance(trials, int) or trials < 1:
        _fail(f"trials must be a positive integer, got {trials!r}")
    return trials


def _resolve_horizon(args, cfg: dict) -> int:
    horizon = args.horizon if getattr(args, "horizon", None) is not None else cfg.get("horizon")
    if horizon is None:
        horizon = DEFAULT_HORIZON
    if not isinstance(horizon, int) or horizon < 1:
        _fail(f"horizon must be a positive integer, got {horizon!r}")
    return horizon


def _model_from(cfg: dict) -> ModelPair:
    if "model" not in cfg:
        _fail("config needs a 'model' object")
    if not isinstance(cfg["model"], dict):
        _fail("config 'model' must be an object")
    return ModelPair.from_dict(cfg["model"])


def _calibrated_threshold(spec: dict, model: ModelPair, gamma: float) -> float:
    """Single bound-calibrated threshold for one detector spec."""
    if spec["variant"] == CUSUM:
        return solve_threshold(gamma, h=1.0).b
    eps = spec.get("epsilon")
    if eps is None:
        _fail(f"detector {spec['variant']!r} needs an epsilon to calibrate against gamma")
    info = sensitivity(model)
    sens = info.value if info.bounded else None
    if sens is None:
        from .models import a_delta

        if spec.get("delta") is None:
            _fail("calibrating an unbounded model needs a delta")
        sens = a_delta(model, spec["delta"])
    return solve_threshold(gamma, eps, sens).b


_SWEEP_KEYS = {"model", "detectors", "thresholds", "epsilons", "gamma", "trials", "horizon", "seed"}


def _sweep_inputs(args) -> tuple[dict, ModelPair, list[dict], int, int, int]:
    cfg = _load_config(args.config)
    _check_keys(cfg, _SWEEP_KEYS, "config")
    model = _model_from(cfg)
    detectors = cfg.get("detectors")
    if not detectors or not isinstance(detectors, list):
        _fail("config needs a nonempty 'detectors' list")
    seed = _resolve_seed(args, cfg)
    trials = _resolve_trials(args, cfg)
    horizon = _resolve_horizon(args, cfg)
    if cfg.get("thresholds") is None and cfg.get("gamma") is not None:
        detectors = [
            dict(spec, thresholds=[_calibrated_threshold(spec, model, cfg["gamma"])])
            for spec in detectors
        ]
    return cfg, model, detectors, seed, trials, horizon


def _effective_sweep_config(cfg, model, detectors, seed, trials, horizon) -> dict:
    out = {
        "model": model.to_dict(),
        "detectors": detectors,
        "trials": trials,
        "horizon": horizon,
        "seed": seed,
    }
    for key in ("thresholds", "epsilons", "gamma"):
        if cfg.get(key) is not None:
            out[key] = cfg[key]
    return out


def _cmd_calibrate(args) -> int:
    if args.h is not None and (args.epsilon is not None or args.delta_sens is not None):
        _fail("pass either --h or --epsilon/--delta-sens, not both")
    if args.h is not None:
        res = solve_threshold(args.gamma, h=args.h)
    else:
        if args.epsilon is None or args.delta_sens is None:
            _fail("calibrate needs --epsilon and --delta-sens (or --h)")
        res = solve_threshold(args.gamma, args.epsilon, args.delta_sens)
    _write_json(
        args.out,
        {"b": res.b, "gamma": res.gamma_target, "h": res.h_value, "bound_at_b": res.bound_at_b},
    )
    return 0


def _single_detector(cfg: dict, model: ModelPair, detectors: list[dict]) -> DetectorConfig:
    if len(detectors) != 1:
        _fail("this command needs exactly one detector in the config")
    configs = _spec_configs(detectors[0], model, cfg.get("epsilons"), cfg.get("thresholds"))
    if len(configs) != 1:
        _fail("this command needs exactly one (epsilon, threshold) combination")
    return configs[0]


def _trace_lines(cfg: DetectorConfig, model: ModelPair, tau, horizon, seed, lane) -> list[str]:
    out = run_to_stop(cfg, model, tau, horizon, _trial_stream(seed, lane, 0), trace=True)
    lines = ["t,s,s_tilde"]
    for t, s, s_tilde in out.trajectory:
        tail = "" if s_tilde is None else repr(s_tilde)
        lines.append(f"{t},{s!r},{tail}")
    return lines


def _run_point_estimate(args, metric: str) -> int:
    cfg, model, detectors, seed, trials, horizon = _sweep_inputs(args)
    det = _single_detector(cfg, model, detectors)
    estimator = estimate_arl if metric == "arl" else estimate_wadd
    report = estimator(det, model, trials, horizon, seed, jobs=args.jobs)
    effective = _effective_sweep_config(cfg, model, detectors, seed, trials, horizon)
    _write_json(args.out, dict(report.to_dict(), effective_config=effective))
    if args.trace is not None:
        lane = LANE_ARL if metric == "arl" else LANE_WADD
        tau = math.inf if metric == "arl" else 0.0
        _write_csv(args.trace, f"{metric}-trace", effective, _trace_lines(det, model, tau, horizon, seed, lane))
    if report.censored_fraction > CENSOR_FAIL_FRACTION:
        raise CheckFailure(
            f"censoring overflow: {report.censored_fraction:.3f} of trials hit the horizon"
        )
    return 0


def _cmd_sweep(args) -> int:
    cfg, model, detectors, seed, trials, horizon = _sweep_inputs(args)
    rows = sweep_delay_vs_arl(
        detectors, model, cfg.get("epsilons"), cfg.get("thresholds"), trials, seed, horizon, args.jobs
    )
    effective = _effective_sweep_config(cfg, model, detectors, seed, trials, horizon)
    _write_csv(args.out, "sweep", effective, sweep_rows_to_csv(rows))
    worst = max(max(r.arl_censored, r.wadd_censored) for r in rows)
    if worst > CENSOR_FAIL_FRACTION:
        raise CheckFailure(f"censoring overflow: worst censored fraction {worst:.3f}")
    return 0


def _cmd_heatmap(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, {"mus", "n_epsilon", "n_delta", "epsilon_max"}, "config")
    mus = list(args.mu) if args.mu else cfg.get("mus")
    if not mus:
        _fail("heatmap needs --mu (repeatable) or a config with 'mus'")
    n_eps = cfg.get("n_epsilon", 60)
    n_delta = cfg.get("n_delta", 60)
    eps_max = cfg.get("epsilon_max", 3.0)
    epsilons, deltas = default_heatmap_axes(n_eps, n_delta, eps_max)
    lines = [HEATMAP_CSV_HEADER]
    for mu in mus:
        for cell in heatmap_grid(mu, epsilons, deltas):
            lines.append(
                ",".join(
                    [
                        repr(float(mu)),
                        repr(cell.epsilon),
                        repr(cell.delta),
                        repr(cell.a_delta),
                        repr(cell.h),
                        "true" if cell.on_boundary else "false",
                    ]
                )
            )
    effective = {
        "mus": [float(m) for m in mus],
        "n_epsilon": n_eps,
        "n_delta": n_delta,
        "epsilon_max": eps_max,
    }
    _write_csv(args.out, "heatmap", effective, lines)
    return 0


_AUDIT_KEYS = {"model", "stream", "neighbor_index", "epsilon", "b", "horizon", "noise_draws", "seed"}


def _cmd_audit(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, _AUDIT_KEYS, "config")
    model = _model_from(cfg)
    for key in ("stream", "epsilon", "b", "horizon", "noise_draws"):
        if key not in cfg:
            _fail(f"audit config needs {key!r}")
    seed = _resolve_seed(args, cfg)
    report = privacy_audit(
        model,
        cfg["stream"],
        cfg.get("neighbor_index"),
        cfg["epsilon"],
        cfg["b"],
        cfg["horizon"],
        cfg["noise_draws"],
        seed,
    )
    effective = dict(cfg, model=model.to_dict(), seed=seed)
    effective.setdefault("neighbor_index", None)
    _write_json(args.out, dict(report.to_dict(), effective_config=effective))
    if not report.passed:
        raise CheckFailure(
            f"privacy audit failed: max ratio upper bound {report.max_upper_bound:.4f} "
            f"exceeds exp(epsilon) * 1.1"
        )
    return 0


_COMPARE_KEYS = {"model", "detectors", "arl_grid", "trials", "seed", "tune_trials"}


def _cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, _COMPARE_KEYS, "config")
    model = _model_from(cfg)
    detectors = cfg.get("detectors")
    if not detectors or len(detectors) < 2:
        _fail("compare needs at least two detectors")
    grid = cfg.get("arl_grid")
    if not grid:
        _fail("compare needs a nonempty 'arl_grid'")
    seed = _resolve_seed(args, cfg)
    trials = _resolve_trials(args, cfg)
    specs = {}
    for spec in detectors:
        label = spec.get("label") or spec["variant"]
        if label in specs:
            _fail(f"duplicate compare label {label!r}")
        specs[label] = {k: v for k, v in spec.items() if k != "label"}
    report = compare_detectors(specs, model, grid, trials, seed, jobs=args.jobs)
    curves = []
    for curve in report.curves:
        curves.append(
            {
                "label": curve.label,
                "spec": curve.spec,
                "thresholds": curve.thresholds,
                "matched_wadd": curve.matched_wadd,
                "points": [
                    {"b": r.b, "arl_est": r.arl_est, "arl_se": r.arl_se, "wadd_est": r.wadd_est, "wadd_se": r.wadd_se}
                    for r in curve.rows
                ],
            }
        )
    first, second = report.curves[0], report.curves[1]
    ordering = [a < b for a, b in zip(first.matched_wadd, second.matched_wadd)]
    effective = {
        "model": model.to_dict(),
        "detectors": detectors,
        "arl_grid": report.arl_grid,
        "trials": trials,
        "seed": seed,
    }
    _write_json(
        args.out,
        {
            "arl_grid": report.arl_grid,
            "curves": curves,
            "first_below_second": ordering,
            "effective_config": effective,
        },
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpcusum",
        description="Differentially private CUSUM change detection: calibration, "
        "simulation sweeps, heatmaps, and the empirical privacy audit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, jobs=True):
        p.add_argument("--out", help="output artifact path ('-' or omitted: stdout)")
        if seed:
            p.add_argument("--seed", type=int, help="master seed (fallback: config, then DPCUSUM_SEED)")
        if jobs:
            p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")

    p = sub.add_parser("calibrate", help="solve the ARL-bound threshold for a target gamma")
    p.add_argument("--gamma", type=float, required=True, help="target mean time between false alarms")
    p.add_argument("--epsilon", type=float, help="privacy budget")
    p.add_argument("--delta-sens", type=float, help="llr sensitivity used by the detector")
    p.add_argument("--h", type=float, help="effective privacy factor, alternative to --epsilon/--delta-sens")
    p.add_argument("--out", help="output path ('-' or omitted: stdout)")
    p.set_defaults(fn=_cmd_calibrate)

    for name, help_text in (("arl", "estimate mean time to false alarm"), ("wadd", "estimate worst-case detection delay")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config with model and one detector")
        p.add_argument("--trials", type=int, help="override config trials")
        p.add_argument("--horizon", type=int, help="override config horizon")
        p.add_argument("--trace", help="write trial 0's (t,s,s_tilde) trajectory CSV here")
        common(p)
        p.set_defaults(fn=lambda args, metric=name: _run_point_estimate(args, metric))

    p = sub.add_parser("sweep", help="delay-vs-ARL sweep over detectors and thresholds")
    p.add_argument("--config", required=True, help="JSON sweep config")
    p.add_argument("--trials", type=int, help="override config trials")
    p.add_argument("--horizon", type=int, help="override config horizon")
    common(p)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("heatmap", help="effective privacy factor grid CSV")
    p.add_argument("--mu", type=float, action="append", help="gaussian shift size (repeatable)")
    p.add_argument("--config", help="JSON config with 'mus' and grid sizes")
    p.add_argument("--out", help="output CSV path ('-' or omitted: stdout)")
    p.set_defaults(fn=_cmd_heatmap)

    p = sub.add_parser("audit", help="empirical per-stopping-time privacy ratio audit")
    p.add_argument("--config", required=True, help="JSON audit config")
    common(p, jobs=False)
    p.set_defaults(fn=_cmd_audit)

    p = sub.add_parser("compare", help="matched-ARL delay comparison of two detectors")
    p.add_argument("--config", required=True, help="JSON compare config")
    p.add_argument("--trials", type=int, help="override config trials")
    common(p)
    p.set_defaults(fn=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, ConfigError) as exc:
        print(json.dumps({"error": str(exc), "code": 2}), file=sys.stderr)
        return 2
    except CheckFailure as exc:
        print(json.dumps({"error": str(exc), "code": 3}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    main()
