"""Command-line entry points.

Subcommands: estimate, simulate, diagnose, rate-study, check-conditions.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .basis import TRIG, FunctionVec
from .config import ConfigError, load_config
from .diagnostics import (
    SingularMomentError,
    decompose_error,
    inverse_moment_monte_carlo,
    projection_bound_constant,
)
from .estimator import DesignDataError, EstimatorConfig, estimate_at
from .experiments import (
    ConfigurationAdvisory,
    TuningRule,
    check_conditions,
    run_rate_study,
    tune,
)
from .multiindex import SizeCapError
from .reporting import (
    parse_site,
    read_dataset_csv,
    write_dataset_csv,
    write_json_report,
    write_manifest,
    write_study_outputs,
)
from .simulate import c2_star, respond_rows, rng_stream, sample_coefficients

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _threads_from(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("FUNLOC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"FUNLOC_THREADS={env!r} is not an integer")
    return 1


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (overrides the config seed)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: FUNLOC_THREADS or 1)")
    p.add_argument("--out", default=".", help="output directory (default: .)")


def _emit(report: dict, out_dir: str, name: str, digest: str, seed: int):
    os.makedirs(out_dir, exist_ok=True)
    path = write_json_report(report, out_dir, name)
    write_manifest(out_dir, digest, seed, [name])
    print(json.dumps(report, sort_keys=True, indent=2))
    return path


def _cmd_estimate(args) -> int:
    xs, ys = read_dataset_csv(args.data, TRIG, args.L)
    site = parse_site(args.site, TRIG, args.L)
    cfg = EstimatorConfig(J=args.J, K=args.K, delta=args.delta)
    result = estimate_at(xs, ys, site, cfg)
    report = {
        "g_hat": result.g_hat,
        "n_local": result.n_local,
        "alpha": [float(a) for a in result.alpha],
        "solver_report": result.solver_report,
    }
    _emit(report, args.out, "estimate_report.json", "", args.seed or 0)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    study, _, notices = load_config(args.config)
    for note in notices:
        print(f"note: {note}", file=sys.stderr)
    seed = args.seed if args.seed is not None else study.seed
    rng = rng_stream(seed, 0)
    C = sample_coefficients(study.model, args.n, rng)
    y, _ = respond_rows(study.target, study.noise, C, rng_stream(seed, 1))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dataset.csv")
    write_dataset_csv(path, y, C)
    write_manifest(args.out, study.config_digest, seed, ["dataset.csv"])
    print(f"wrote {path} ({args.n} rows)")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    study, _, notices = load_config(args.config)
    for note in notices:
        print(f"note: {note}", file=sys.stderr)
    seed = args.seed if args.seed is not None else study.seed
    n = args.n if args.n is not None else study.n_grid[-1]
    J, K = tune(n, study.rule)
    cfg = EstimatorConfig(J=J, K=K, delta=study.delta)

    data_rng = rng_stream(seed, 0)
    C = sample_coefficients(study.model, n, data_rng)
    xs = [FunctionVec(row) for row in C]
    y, eps = respond_rows(study.target, study.noise, C, rng_stream(seed, 1))
    decomp = decompose_error(xs, y, study.site, cfg, study.target, eps)

    bounds = inverse_moment_monte_carlo(study.model, study.site, cfg,
                                        m=args.draws, seed=seed + 1)
    if study.target.supports_norms:
        bounds.projection_bound_constant = projection_bound_constant(
            study.target, study.site, cfg)

    report = {
        "n": n, "J": J, "K": K, "delta": study.delta,
        "decomposition": dataclasses.asdict(decomp),
        "bounds": dataclasses.asdict(bounds),
        "c2_star": c2_star(study.model, study.site, study.delta),
        "conditions": dataclasses.asdict(check_conditions(study.rule)),
    }
    _emit(report, args.out, "diagnose_report.json", study.config_digest, seed)
    return EXIT_OK


def _cmd_rate_study(args) -> int:
    study, _, notices = load_config(args.config)
    for note in notices:
        print(f"note: {note}", file=sys.stderr)
    if args.seed is not None:
        study = dataclasses.replace(study, seed=args.seed)
    threads = _threads_from(args)
    result = run_rate_study(study, threads=threads)
    manifest = write_study_outputs(result, args.out, render_figure=not args.no_figure)
    print(json.dumps({
        "kappa_hat": result.kappa_hat,
        "baseline_kappa_hat": result.baseline_kappa_hat,
        "advisories": result.advisories,
        "outputs": manifest.outputs,
        "out_dir": args.out,
    }, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_check_conditions(args) -> int:
    rule = TuningRule(D0=args.D0, D1=args.D1, gamma=args.gamma, c1=args.c1)
    report = dataclasses.asdict(check_conditions(rule))
    _emit(report, args.out, "conditions_report.json", "", args.seed or 0)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funloc",
        description="Local polynomial regression for functional covariates")
    parser.add_argument("--version", action="version", version=f"funloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate at a site from a dataset CSV")
    p.add_argument("--data", required=True, help="dataset CSV (y plus coeff_*/grid_* columns)")
    p.add_argument("--site", required=True,
                   help="site: comma-separated coefficients or a one-curve CSV")
    p.add_argument("--delta", type=float, required=True, help="neighborhood radius in (0,1)")
    p.add_argument("--J", type=int, required=True, help="projection dimension")
    p.add_argument("--K", type=int, required=True, help="degree bound (fit degree K-1)")
    p.add_argument("--basis", choices=["trig"], default="trig")
    p.add_argument("--L", type=int, default=None, help="projection rank for grid_* data")
    _common_flags(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("simulate", help="emit a dataset CSV from a model config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--n", type=int, default=200, help="number of rows (default 200)")
    _common_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("diagnose", help="error decomposition and bound diagnostics")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--n", type=int, default=None,
                   help="dataset size (default: largest n_grid entry)")
    p.add_argument("--draws", type=int, default=200000,
                   help="Monte Carlo draws for the moment checks")
    _common_flags(p)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("rate-study", help="run a Monte Carlo convergence-rate study")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    _common_flags(p)
    p.set_defaults(func=_cmd_rate_study)

    p = sub.add_parser("check-conditions", help="evaluate the rate conditions")
    p.add_argument("--D0", type=float, required=True)
    p.add_argument("--D1", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--c1", type=float, default=1.0)
    _common_flags(p)
    p.set_defaults(func=_cmd_check_conditions)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationAdvisory, SizeCapError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DesignDataError, SingularMomentError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
