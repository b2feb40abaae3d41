"""
Command-line entry point.

    python -m src.cli estimate     --config configs/weibull_table.cfg [--seed N] [--workers N] [--a-star A] [--out PATH]
    python -m src.cli find-a-star  --config configs/weibull_table.cfg [--gamma G] [--y-min Y] [--grid-step H] [--a-star A]
    python -m src.cli validate     [--checks a,b,...] [--seed N] [--out PATH]
    python -m src.cli sampler-test --config configs/weibull_table.cfg [--betas 5,30,100] [--draws N]

Exit codes: 0 success, 2 configuration error, 3 numeric or calibration
failure, 4 validation failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from src.core.approximation import Approximation
from src.core.config import EstimatorKind, ExperimentConfig, load_config
from src.core.errors import ConfigError, SimulationError, ValidationFailure
from src.core.safety import default_y_min, find_a_star, manual_safety_params, second_moment_bound
from src.estimators.diagnostics import cv_trend, steps_linearity
from src.estimators.harness import prepare_setup, run_experiment
from src.utils.report import resolve_output, write_estimates, write_frame, write_margins
from src.validation.sampler_check import DEFAULT_BETAS, results_frame, run_sampler_tests
from src.validation.suite import CHECKS, run_suite

logger = logging.getLogger("src.cli")


# --------------------------------------------------
# Helpers
# --------------------------------------------------

def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _name_list(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    overrides = {
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "output": getattr(args, "out", None),
    }
    config = config.with_overrides(**overrides)
    config = config.with_calibration(
        gamma=getattr(args, "gamma", None),
        a_star=getattr(args, "a_star", None),
        y_min=getattr(args, "y_min", None),
        grid_step=getattr(args, "grid_step", None),
    )
    if config.seed < 0:
        raise ConfigError(f"--seed must be nonnegative, got {config.seed}")
    if config.workers is not None and config.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {config.workers}")
    cal = config.calibration
    if not 0.0 < cal.gamma < 1.0:
        raise ConfigError(f"--gamma must lie in (0, 1), got {cal.gamma}")
    if cal.y_min is not None and cal.y_min >= 0.0:
        raise ConfigError(f"--y-min must be negative, got {cal.y_min}")
    if cal.grid_step <= 0.0:
        raise ConfigError(f"--grid-step must be positive, got {cal.grid_step}")
    return config


def _print_table(rows: Sequence[Sequence[str]], header: Sequence[str]) -> None:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    print("  ".join(str(h).rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(str(x).rjust(w) for x, w in zip(row, widths)))


# --------------------------------------------------
# Subcommands
# --------------------------------------------------

def cmd_estimate(args) -> int:
    config = _load(args)
    model = config.model.build()
    print(f"[CFG] model={model!r} estimator={config.estimator.value} n={config.n} seed={config.seed}")

    setup = prepare_setup(config)
    if setup.safety is not None:
        print(f"[CAL] gamma={setup.safety.gamma:g} a_star={setup.safety.a_star:g} kappa={setup.safety.kappa:.4e}")
    if setup.theta_star is not None:
        print(f"[CAL] theta_star={setup.theta_star:.12g}")

    summaries = run_experiment(config, setup, progress=args.progress)

    rows = []
    for b, s in summaries.items():
        row = [f"{b:g}", f"{s.mean:.3e}", f"[{s.ci95[0]:.3e}, {s.ci95[1]:.3e}]", f"{s.cv:.3g}", f"{s.mean_steps:.1f}"]
        if config.estimator is EstimatorKind.BG:
            v = setup.approx.v(-b)
            bound = second_moment_bound(setup.safety, setup.approx, b)
            row += [f"{v:.3e}", f"{bound:.3e}"]
        rows.append(row)
    header = ["b", "mean", "95% CI", "cv", "steps"]
    if config.estimator is EstimatorKind.BG:
        header += ["v(-b)", "E R^2 bound"]
    _print_table(rows, header)

    if len(summaries) >= 2:
        levels = list(summaries)
        fit = steps_linearity(levels, [s.mean_steps for s in summaries.values()])
        trend = cv_trend(levels, [s.cv for s in summaries.values()])
        print(f"[DIAG] steps ~ {fit.slope:.4g} b + {fit.intercept:.4g} (R^2={fit.r2:.4f}); "
              f"cv {trend.first:.3g} -> {trend.last:.3g}")

    path = resolve_output(config.output, f"{config.model.name}_{config.estimator.value}_estimates.csv")
    write_estimates(path, config, summaries, setup.safety)
    print(f"Estimates written → {path}")
    return 0


def cmd_find_a_star(args) -> int:
    config = _load(args)
    cal = config.calibration
    approx = Approximation(config.model.build())

    # the scan ignores an a_star set in the file; only the flag skips it
    if args.a_star is not None:
        print(f"[CFG] model={approx.model!r} gamma={cal.gamma:g} a_star={args.a_star:g} (manual, grid scan skipped)")
        safety = manual_safety_params(approx, cal.gamma, args.a_star)
        print(f"a_star={safety.a_star:g} kappa={safety.kappa:.6e}")
        return 0

    y_min = cal.y_min if cal.y_min is not None else default_y_min(max(config.levels))
    print(f"[CFG] model={approx.model!r} gamma={cal.gamma:g} y_min={y_min:g} grid_step={cal.grid_step:g}")
    safety = find_a_star(approx, cal.gamma, y_min, cal.grid_step)
    print(f"a_star={safety.a_star:g} kappa={safety.kappa:.6e} ({len(safety.verified_grid)} grid points verified)")

    path = resolve_output(config.output, f"{config.model.name}_margins.csv")
    write_margins(path, safety)
    print(f"Margins written → {path}")
    return 0


def cmd_validate(args) -> int:
    if args.n < 1:
        raise ConfigError(f"--n must be >= 1, got {args.n}")
    selection = None if args.checks is None else _name_list(args.checks)
    report = run_suite(selection, v_corruption=args.v_corruption, seed=args.seed or 0, n=args.n)

    frame = report.frame()
    rows = [
        [r.check, r.status, f"{r.worst:.3e}", f"{r.tolerance:.1e}", f"{r.seconds:.1f}s"]
        for r in frame.itertuples(index=False)
    ]
    _print_table(rows, ["check", "status", "worst", "tol", "time"])

    if args.out is not None:
        write_frame(resolve_output(args.out, "validate.csv"), frame)

    failure = report.first_failure
    if failure is not None:
        raise ValidationFailure(
            f"check {failure.name} failed: worst {failure.worst:.6e} > tolerance {failure.tolerance:.1e} ({failure.detail})"
        )
    print("✔ All checks passed.")
    return 0


def cmd_sampler_test(args) -> int:
    config = _load(args)
    model = config.model.build()
    if not model.is_continuous:
        raise ConfigError(f"sampler-test needs a continuous model, got {config.model.name!r}")
    approx = Approximation(model)
    betas = args.betas or list(DEFAULT_BETAS)

    results = run_sampler_tests(approx, betas, draws=args.draws, seed=config.seed, settings=config.sampler)
    frame = results_frame(results, args.alpha)
    rows = [
        [f"{r.beta:g}", r.scheme, str(r.draws), f"{r.acceptance:.3g}", f"{r.ks_stat:.4g}", f"{r.pvalue:.4g}", r.status]
        for r in frame.itertuples(index=False)
    ]
    _print_table(rows, ["beta", "scheme", "draws", "acceptance", "D", "p", "status"])

    if config.output is not None:
        write_frame(resolve_output(config.output, "sampler_test.csv"), frame)

    failed = [r for r in results if not r.passed(args.alpha)]
    if failed:
        worst = min(failed, key=lambda r: r.pvalue)
        raise ValidationFailure(f"{worst.scheme} at beta={worst.beta:g}: KS p-value {worst.pvalue:.3g} <= {args.alpha:g}")
    return 0


# --------------------------------------------------
# Main
# --------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m src.cli", description="Rare-event estimation for random-walk maxima.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool = True):
        p.add_argument("--config", type=Path, required=config_required, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("--out", type=Path, default=None, help="output CSV (default logs/csv/...)")

    p = sub.add_parser("estimate", help="run an estimator over the configured levels")
    common(p)
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--progress", action="store_true", help="show a progress bar")
    p.add_argument("--a-star", type=float, default=None, help="fixed safety shift (skips calibration)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("find-a-star", help="calibrate the safety shift and write the margins")
    common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--y-min", type=float, default=None)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--a-star", type=float, default=None, help="report kappa for a fixed shift instead of scanning")
    p.set_defaults(func=cmd_find_a_star)

    p = sub.add_parser("validate", help="run the exact-oracle suite")
    p.add_argument("--checks", type=str, default=None, help="comma-separated subset of: " + ", ".join(CHECKS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=20_000, help="replications for the simulation checks")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--v-corruption", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sampler-test", help="KS tests of the conditional samplers")
    common(p)
    p.add_argument("--betas", type=_float_list, default=None)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--alpha", type=float, default=0.01)
    p.set_defaults(func=cmd_sampler_test)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SimulationError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
