"""Command-line front end.

    lagreg <command> --config run.toml --out results/ [--seed S] [--threads K] [--overwrite]

Errors go to stderr as one JSON line ``{"error": <category>, "message": ...}``
with a category-specific exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import COMMANDS, ConfigError, RunSettings, parse_config
from .estimator import fit, ise
from .experiments import (
    ReplicationError,
    oracle_coefficients,
    run_autocov_check,
    run_basis_check,
    run_risk_study,
    run_variance_study,
)
from .io import (
    AUTOCOV_HEADER,
    COEFF_HEADER,
    SAMPLE_HEADER,
    SWEEP_HEADER,
    VARIANCE_HEADER,
    OutputDir,
    OutputExistsError,
    coeff_rows,
    csv_text,
    emit_results,
    json_text,
    summary,
)
from .model import simulate

EXIT_CODES = {"usage": 2, "config": 3, "io": 4, "runtime": 5}

OUTPUTS = {
    "simulate": ["sample.csv", "summary.json"],
    "estimate": ["coeffs.csv", "summary.json"],
    "risk-study": ["risk.csv", "summary.json", "sweep.csv"],
    "variance-study": ["variance.csv", "summary.json"],
    "noise-check": ["autocov.csv", "summary.json"],
    "basis-check": ["summary.json"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagreg", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat TOML run configuration")
    parser.add_argument("--out", required=True, help="output directory (created if absent)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    parser.add_argument("--overwrite", action="store_true", help="replace existing output files")
    return parser


def _log(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _simulate(settings: RunSettings, out: OutputDir, threads: int) -> None:
    sample = simulate(settings.model, settings.values["seed"], 0)
    rows = [(i, float(t), float(y)) for i, (t, y) in enumerate(zip(sample.t, sample.y))]
    out.write("sample.csv", csv_text(SAMPLE_HEADER, rows))
    out.write("summary.json", json_text(summary(settings.command, settings.values, n=sample.n)))


def _estimate(settings: RunSettings, out: OutputDir, threads: int) -> None:
    sample = simulate(settings.model, settings.values["seed"], 0)
    est = fit(sample, settings.cfg)
    oracle, tail = oracle_coefficients(settings.model, est.m, settings.values["oracle_order"])
    out.write("coeffs.csv", csv_text(COEFF_HEADER, coeff_rows(est)))
    out.write("summary.json", json_text(summary(
        settings.command, settings.values,
        n=sample.n, m=est.m, threshold=est.lam, kept_count=est.kept_count,
        ise=ise(est, oracle, tail), oracle_tail=tail,
    )))


def _risk_study(settings: RunSettings, out: OutputDir, threads: int) -> None:
    plan = settings.plan
    result = run_risk_study(plan, threads=threads, log=_log)
    sweep, rows = [], []
    for gamma in settings.values["gamma_sweep"]:
        # the sweep overrides gamma1/gamma2 too, so it acts in both regimes
        cfg = replace(plan.cfg, gamma=gamma, gamma1=None, gamma2=None)
        _log(f"gamma={gamma}")
        res = run_risk_study(replace(plan, cfg=cfg), threads=threads, log=_log)
        sweep.append({"gamma": gamma, "slope": res.slope, "slope_se": res.slope_se})
        rows.extend((gamma, r.n, r.mean_risk, r.risk_se, r.kept_mean) for r in res.per_n)
    if sweep:
        out.write("sweep.csv", csv_text(SWEEP_HEADER, rows))
        emit_results(result, out.path, settings.values, overwrite=out.overwrite, sweep=sweep)
    else:
        emit_results(result, out.path, settings.values, overwrite=out.overwrite)


def _variance_study(settings: RunSettings, out: OutputDir, threads: int) -> None:
    l = settings.values["coefficient"]
    result = run_variance_study(settings.plan, l, threads=threads, log=_log)
    rows = [(r.n, r.variance, r.variance_se, r.mean_estimate) for r in result.per_n]
    out.write("variance.csv", csv_text(VARIANCE_HEADER, rows))
    out.write("summary.json", json_text(summary(
        settings.command, settings.values,
        slope=result.slope, slope_se=result.slope_se,
        theoretical_exponent=result.theoretical_exponent, coefficient=l,
    )))


def _noise_check(settings: RunSettings, out: OutputDir, threads: int) -> None:
    v = settings.values
    rows, checks = [], []
    for alpha in v["alphas"]:
        chk = run_autocov_check(alpha, v["n"], v["paths"], v["max_lag"], v["seed"])
        _log(f"alpha={alpha} max|z|={chk.max_abs_z:.3f} decay_slope={chk.decay_slope}")
        rows.extend((alpha, int(k), float(s), float(e), float(x))
                    for k, s, e, x in zip(chk.lags, chk.sample, chk.se, chk.exact))
        checks.append({"alpha": alpha, "max_abs_z": chk.max_abs_z,
                       "decay_slope": chk.decay_slope, "decay_slope_se": chk.decay_slope_se})
    out.write("autocov.csv", csv_text(AUTOCOV_HEADER, rows))
    out.write("summary.json", json_text(summary(settings.command, v, checks=checks)))


def _basis_check(settings: RunSettings, out: OutputDir, threads: int) -> None:
    v = settings.values
    chk = run_basis_check(v["k_gram"], v["b_gram"], v["order"], v["k_bound"], v["t_max"], v["points"])
    out.write("summary.json", json_text(summary(
        settings.command, v,
        gram_max_deviation=chk.gram_max_deviation, max_abs_phi=chk.max_abs_phi,
    )))


HANDLERS = {
    "simulate": _simulate,
    "estimate": _estimate,
    "risk-study": _risk_study,
    "variance-study": _variance_study,
    "noise-check": _noise_check,
    "basis-check": _basis_check,
}


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES[category]


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc))
    if args.threads is not None and args.threads < 1:
        return _fail("usage", "--threads must be a positive integer")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        return _fail("usage", "--seed must be a 64-bit unsigned integer")
    threads = args.threads or os.cpu_count() or 1
    try:
        settings = parse_config(args.config, args.command, args.seed)
        out = OutputDir(args.out, args.overwrite)
        out.check(OUTPUTS[args.command])
        HANDLERS[args.command](settings, out, threads)
    except ConfigError as exc:
        return _fail("config", str(exc))
    except (OutputExistsError, OSError) as exc:
        return _fail("io", str(exc))
    except (ReplicationError, ValueError, ArithmeticError) as exc:
        return _fail("runtime", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
