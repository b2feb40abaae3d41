"""
Named oracle checks run by `validate`.

Each check builds a small lattice instance, computes the exact answer by
linear algebra and compares it with the estimator or with an inequality.
A check never raises on a mismatch; it returns a CheckResult with the
worst discrepancy so the CLI can print a pass/fail table.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.approximation import Approximation, BaseApproximation, FunctionApproximation
from src.core.conditional_sampler import ConditionalSampler
from src.core.errors import ConfigError
from src.core.safety import find_a_star, manual_safety_params
from src.estimators.bg import bg_replicate
from src.estimators.results import summarize
from src.utils.random_stream import RandomStream
from src.validation.lattice import DiscreteWalkSpec, exact_u_star, harmonic_residual
from src.validation.lyapunov import (
    bg_kernel_ratio,
    constant_ratio,
    exact_second_moment,
    lyapunov_check,
    restricted_mean,
    safety_certificate,
    truncate_below,
    zero_variance_ratio,
)

logger = logging.getLogger(__name__)

# ============================================================
# Instances
# ============================================================

GAMBLERS_RUIN = DiscreteWalkSpec.from_mapping({-1.0: 0.7, 1.0: 0.3})
SKEWED_WALK = DiscreteWalkSpec.from_mapping({-2.0: 0.5, 1.0: 0.5})
NO_UPWARD_MASS = DiscreteWalkSpec.from_mapping({-1.0: 0.5, 0.0: 0.5})

# lowest level the heavy-lattice calibration scans
HEAVY_Y_MIN = -60.0


def heavy_lattice(top: int = 100, down_mass: float = 0.8, index: float = 3.0) -> DiscreteWalkSpec:
    """Jump -1 with probability down_mass, else k in 1..top with P ~ k^-index."""
    ks = np.arange(1, top + 1, dtype=float)
    weights = ks ** -index
    up = (1.0 - down_mass) * weights / weights.sum()
    support = (-1.0,) + tuple(ks)
    probs = (1.0 - float(up.sum()),) + tuple(float(p) for p in up)
    return DiscreteWalkSpec(support, probs)


def geometric_v(base: float = 0.45) -> Callable[[float], float]:
    """A strictly positive v; the estimator built on it is unbiased for u*."""
    return lambda y: base ** max(-y, 0.0) if y <= 0.0 else 1.0


def calibrated_heavy_lattice(y_min: float = HEAVY_Y_MIN):
    """
    heavy_lattice with the integrated-tail v cut to 0 below y_min and a_star
    calibrated from y_min. Near -top the integrated tail is too thin for the
    margin to hold, so the shifted sampler is kept inside the scanned range.
    """
    spec = heavy_lattice()
    approx = truncate_below(Approximation(spec.model()), y_min)
    safety = find_a_star(approx, 0.5, y_min=y_min, grid_step=spec.step)
    return spec, approx, safety


# ============================================================
# Results
# ============================================================

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float               # largest discrepancy seen, in the check's own units
    tolerance: float
    detail: str = ""
    seconds: float = 0.0


@dataclass
class SuiteReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def first_failure(self) -> Optional[CheckResult]:
        return next((r for r in self.results if not r.passed), None)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.name, "PASS" if r.passed else "FAIL", r.worst, r.tolerance, r.seconds, r.detail) for r in self.results],
            columns=["check", "status", "worst", "tolerance", "seconds", "detail"],
        )


@dataclass(frozen=True)
class SuiteOptions:
    seed: int = 0
    n: int = 20_000
    v_corruption: float = 1.0    # scale applied to the exact u* in the zero-variance check


def _result(name: str, worst: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(worst <= tolerance), worst=float(worst), tolerance=tolerance, detail=detail)


def _bg_summary(approx: BaseApproximation, a_star: float, b: float, n: int, seed: int):
    safety = manual_safety_params(approx, 0.5, a_star)
    sampler = ConditionalSampler(approx)
    results = [
        bg_replicate(approx, safety, sampler, b, RandomStream.for_replication(seed, i))
        for i in range(n)
    ]
    return results, summarize(results)


def _within(value: float, target: float, stderr: float, sigmas: float = 4.0) -> float:
    """|value - target| in units of sigmas * stderr (<= 1 passes)."""
    if stderr <= 0.0 or math.isnan(stderr):
        return 0.0 if math.isclose(value, target, rel_tol=1e-12) else math.inf
    return abs(value - target) / (sigmas * stderr)


# ============================================================
# Checks
# ============================================================

def check_gamblers_ruin(options: SuiteOptions) -> CheckResult:
    sol = exact_u_star(GAMBLERS_RUIN, 40)
    worst = max(abs(sol.u(-b) / (3.0 / 7.0) ** (b + 1) - 1.0) for b in range(0, 11))
    return _result("gamblers_ruin", worst, 1e-10, "u*(-b) against (3/7)^(b+1)")


def check_methods_agree(options: SuiteOptions) -> CheckResult:
    linear = exact_u_star(SKEWED_WALK, 40, method="linear")
    iterated = exact_u_star(SKEWED_WALK, 40, method="iteration")
    worst = float(np.max(np.abs(linear.u_star - iterated.u_star) / linear.u_star))
    return _result("methods_agree", worst, 1e-10, "banded solve against value iteration")


def check_harmonic(options: SuiteOptions) -> CheckResult:
    worst = 0.0
    for spec in (GAMBLERS_RUIN, SKEWED_WALK, heavy_lattice()):
        worst = max(worst, harmonic_residual(spec, exact_u_star(spec, 200)))
    return _result("harmonic", worst, 1e-10, "u*(y) = sum_j p_j u*(y + x_j)")


def check_no_upward_mass(options: SuiteOptions) -> CheckResult:
    sol = exact_u_star(NO_UPWARD_MASS, 20)
    return _result("no_upward_mass", float(np.max(sol.u_star)), 0.0, "walk never moves up")


def check_zero_variance(options: SuiteOptions) -> CheckResult:
    spec, b = GAMBLERS_RUIN, 5
    exact = exact_u_star(spec, 60)
    factor = options.v_corruption
    v = lambda y: 1.0 if y > 0.0 else min(1.0, factor * exact.u(y))
    approx = FunctionApproximation(spec.model(), v, label="u*" if factor == 1.0 else f"{factor:g} u*")

    results, summary = _bg_summary(approx, 0.0, b, min(options.n, 2_000), options.seed)
    target = exact.u(-b)
    worst = max(abs(r.R / target - 1.0) for r in results)

    series = exact_second_moment(spec, zero_variance_ratio(exact), 60)
    series_gap = max(abs(series.s(-k) / exact.u(-k) ** 2 - 1.0) for k in range(0, 11))
    return _result(
        "zero_variance",
        max(worst, series_gap),
        1e-9,
        f"R against u*(-{b})={target:.6e}, sample variance {summary.variance:.3e}",
    )


def check_identity_kernel(options: SuiteOptions) -> CheckResult:
    spec = SKEWED_WALK
    exact = exact_u_star(spec, 40)
    series = exact_second_moment(spec, constant_ratio(1.0), 40)
    worst = float(np.max(np.abs(series.values[-21:] / exact.u_star[-21:] - 1.0)))
    return _result("identity_kernel", worst, 1e-9, "r = 1 gives s = u*")


def check_second_moment_recursion(options: SuiteOptions) -> CheckResult:
    spec, L = GAMBLERS_RUIN, 40
    approx = FunctionApproximation(spec.model(), geometric_v(), label="geometric")
    ratio = bg_kernel_ratio(approx, 0.0)
    s = exact_second_moment(spec, ratio, L)
    grid = -np.arange(0, L)            # every jump from these levels stays in the table
    report = lyapunov_check(spec, s, ratio, grid)
    worst = float(report.frame["margin"].abs().max())
    return _result("second_moment_recursion", worst, 1e-10, "h = s* makes the drift inequality tight")


def check_cauchy_schwarz(options: SuiteOptions) -> CheckResult:
    spec = GAMBLERS_RUIN
    exact = exact_u_star(spec, 40)
    approx = FunctionApproximation(spec.model(), geometric_v(), label="geometric")
    s = exact_second_moment(spec, bg_kernel_ratio(approx, 0.0), 40)
    worst = max(exact.u(-k) ** 2 / s.s(-k) - 1.0 for k in range(0, 21))
    return _result("cauchy_schwarz", max(worst, 0.0), 1e-10, "s* >= u*^2")


def check_safety_certificate(options: SuiteOptions) -> CheckResult:
    spec, approx, safety = calibrated_heavy_lattice()
    certificate = safety_certificate(approx, safety)
    ratio = bg_kernel_ratio(approx, safety.a_star)

    # levels y with y + a_star in [y_min, a_star]: all the sampler can reach
    grid = np.arange(math.ceil(HEAVY_Y_MIN - safety.a_star), 1, dtype=float)
    report = lyapunov_check(spec, certificate, ratio, grid)
    scale = float(report.frame["h"].abs().max()) or 1.0
    drift = report.max_margin / scale

    s = exact_second_moment(spec, ratio, 20)
    bound_gap = max(s.s(-k) / certificate(-k) - 1.0 for k in range(0, 21))
    return _result(
        "safety_certificate",
        max(drift, bound_gap, 0.0),
        1e-9,
        f"a_star={safety.a_star:g} kappa={safety.kappa:.4e}; worst drift at y={report.worst_level:g}",
    )


def check_unbiased(options: SuiteOptions) -> CheckResult:
    spec = GAMBLERS_RUIN
    exact = exact_u_star(spec, 60)
    approx = FunctionApproximation(spec.model(), geometric_v(), label="geometric")
    s = exact_second_moment(spec, bg_kernel_ratio(approx, 0.0), 60)

    worst = 0.0
    for k, b in enumerate((3, 5, 8)):
        _, summary = _bg_summary(approx, 0.0, b, options.n, options.seed + k)
        worst = max(
            worst,
            _within(summary.mean, exact.u(-b), summary.stderr),
            _within(summary.second_moment, s.s(-b), summary.second_moment_stderr),
        )
    return _result("unbiased", worst, 1.0, "mean and E R^2 within 4 standard errors at b = 3, 5, 8")


def check_restricted_mean(options: SuiteOptions) -> CheckResult:
    b = 8
    spec, approx, safety = calibrated_heavy_lattice()
    target = restricted_mean(spec, approx, safety.a_star, 20)
    s = exact_second_moment(spec, bg_kernel_ratio(approx, safety.a_star), 20)

    _, summary = _bg_summary(approx, safety.a_star, b, options.n // 4, options.seed)
    worst = max(
        _within(summary.mean, target.s(-b), summary.stderr),
        _within(summary.second_moment, s.s(-b), summary.second_moment_stderr),
    )
    return _result(
        "restricted_mean",
        worst,
        1.0,
        f"integrated-tail v, a_star={safety.a_star:g}: mean {summary.mean:.4e} vs {target.s(-b):.4e}",
    )


CHECKS: Dict[str, Callable[[SuiteOptions], CheckResult]] = {
    "gamblers_ruin": check_gamblers_ruin,
    "methods_agree": check_methods_agree,
    "harmonic": check_harmonic,
    "no_upward_mass": check_no_upward_mass,
    "zero_variance": check_zero_variance,
    "identity_kernel": check_identity_kernel,
    "second_moment_recursion": check_second_moment_recursion,
    "cauchy_schwarz": check_cauchy_schwarz,
    "safety_certificate": check_safety_certificate,
    "unbiased": check_unbiased,
    "restricted_mean": check_restricted_mean,
}


def run_suite(
    selection: Optional[Sequence[str]] = None,
    v_corruption: float = 1.0,
    seed: int = 0,
    n: int = 20_000,
) -> SuiteReport:
    """Run the named checks (all when selection is None) in registration order."""
    if selection is None:
        names = list(CHECKS)
    else:
        names = list(selection)
        if not names:
            raise ConfigError("empty check selection; choose from " + ", ".join(CHECKS))
        unknown = [name for name in names if name not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; choose from " + ", ".join(CHECKS))

    options = SuiteOptions(seed=seed, n=n, v_corruption=v_corruption)
    report = SuiteReport()
    for name in names:
        t0 = time.perf_counter()
        result = CHECKS[name](options)
        result = replace(result, seconds=time.perf_counter() - t0)
        logger.info("%-24s %s (worst %.3e, tol %.1e)", name, "PASS" if result.passed else "FAIL", result.worst, result.tolerance)
        report.results.append(result)
    return report
