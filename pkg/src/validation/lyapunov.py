"""
Second moments and drift inequalities on lattice instances.

A change of measure is summarised by the ratio r(y, z) its likelihood
ratio picks up on the move y -> z. With K(y, z) = r(y, z) p(z - y) on the
continuation levels z <= 0 and eta(y) = sum over z > 0 of r(y, z) p(z - y),
the second moment of the estimator started at y is

    s(y) = sum_n (K^n eta)(y),

and any nonnegative h with (K h)(y) <= h(y) - eta(y) bounds s from above.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.approximation import BaseApproximation, FunctionApproximation
from src.core.errors import UnstableSamplerWarning
from src.core.safety import SafetyParams
from src.validation.lattice import MIN_DEPTH, DiscreteWalkSpec, Ratio, killed_kernel

logger = logging.getLogger(__name__)

SERIES_RTOL = 1e-14
GROWTH_WINDOW = 1000


# ============================================================
# Ratio and certificate constructors
# ============================================================

def zero_variance_ratio(u: Callable[[float], float]) -> Ratio:
    """r(y, z) = u(y) / u(z): every path carries the same weight u(y0)."""
    def ratio(y: float, z: float) -> float:
        uz = u(z)
        return u(y) / uz if uz > 0.0 else math.inf
    return ratio


def bg_kernel_ratio(approx: BaseApproximation, a_star: float) -> Ratio:
    """r(y, z) = w(y + a) / v(z + a); moves onto v = 0 have no probability and are dropped."""
    v = lru_cache(maxsize=None)(lambda y: approx.v(y + a_star))
    w = lru_cache(maxsize=None)(lambda y: approx.w(y + a_star))

    def ratio(y: float, z: float) -> float:
        vz = v(z)
        return w(y) / vz if vz > 0.0 else math.inf
    return ratio


def q_support_indicator(approx: BaseApproximation, a_star: float) -> Ratio:
    """
    r = 1 on moves the shifted sampler can make. The resulting series is
    P(the walk crosses without ever stepping where v(. + a) = 0), which is
    what the estimator is unbiased for when v has bounded support.
    """
    return lambda y, z: 1.0 if approx.v(z + a_star) > 0.0 else math.inf


def constant_ratio(value: float = 1.0) -> Ratio:
    return lambda y, z: value


def truncate_below(approx: BaseApproximation, floor: float) -> FunctionApproximation:
    """
    The same v at and above `floor`, 0 below it. A sampler shifted by a_star
    then never steps to a level y with y + a_star < floor, so every state it
    visits lies in the range find_a_star scanned from `floor`.
    """
    v = lru_cache(maxsize=None)(approx.v)
    return FunctionApproximation(
        approx.model,
        lambda y: v(y) if y >= floor else 0.0,
        approx.quadrature,
        label=f"v truncated below {floor:g}",
    )


def safety_certificate(approx: BaseApproximation, safety: SafetyParams) -> Callable[[float], float]:
    """
    H(y) = v(y + a)^2 h(y) / ((1 - gamma) kappa^2) with h = 1 where
    y + a <= 0 and 1 - gamma above; a drift function for the shifted
    sampler whenever the admissibility margin holds at y + a.
    """
    a = safety.a_star
    scale = 1.0 / (safety.epsilon * safety.kappa ** 2)

    def certificate(y: float) -> float:
        v = approx.v(y + a)
        level = 1.0 if y + a <= 0.0 else safety.epsilon
        return scale * v * v * level

    return certificate


# ============================================================
# Drift check
# ============================================================

@dataclass(frozen=True)
class LyapunovReport:
    frame: pd.DataFrame       # y, h, kh, eta, margin

    @property
    def max_margin(self) -> float:
        return float(self.frame["margin"].max())

    @property
    def worst_level(self) -> float:
        return float(self.frame.loc[self.frame["margin"].idxmax(), "y"])

    def passed(self, atol: float = 0.0) -> bool:
        return self.max_margin <= atol


def lyapunov_check(
    spec: DiscreteWalkSpec,
    h: Callable[[float], float],
    r: Ratio,
    grid: Sequence[float],
) -> LyapunovReport:
    """(K h)(y) - h(y) + eta(y) at each grid level, by exact summation."""
    rows = []
    for y in grid:
        y = float(y)
        kh_terms, eta_terms = [], []
        for x, p in zip(spec.support, spec.probs):
            z = y + x
            rr = r(y, z)
            if p * rr == 0.0 or not math.isfinite(rr):
                continue
            if z > 0.0:
                eta_terms.append(p * rr)
            else:
                hz = h(z)
                if hz != 0.0:
                    kh_terms.append(p * rr * hz)
        kh, eta = math.fsum(kh_terms), math.fsum(eta_terms)
        hy = h(y)
        rows.append((y, hy, kh, eta, kh - hy + eta))
    frame = pd.DataFrame(rows, columns=["y", "h", "kh", "eta", "margin"])
    return LyapunovReport(frame)


# ============================================================
# Second moment series
# ============================================================

@dataclass(frozen=True)
class SeriesSolution:
    levels: np.ndarray
    values: np.ndarray
    depth: int
    terms: int

    def s(self, y: float) -> float:
        """s(y); 0 below the tabulated range. Above 0 the run has already stopped."""
        if y > 0.0:
            return 1.0
        step = float(self.levels[-1] - self.levels[-2]) if len(self.levels) > 1 else 1.0
        idx = len(self.levels) - 1 - int(round(-y / step))
        return float(self.values[idx]) if idx >= 0 else 0.0

    def __call__(self, y: float) -> float:
        return self.s(y)


def _diverged(total: np.ndarray, rate: float):
    warnings.warn(
        f"second-moment series grows by a factor {rate:.6g} per step; "
        "the importance sampler has infinite variance",
        UnstableSamplerWarning,
        stacklevel=4,
    )
    return np.full_like(total, math.inf)


def _series(kernel, rtol: float, max_terms: int):
    total = kernel.eta.copy()
    term = kernel.eta.copy()
    window_start = float(np.max(np.abs(term)))
    for n in range(1, max_terms + 1):
        term = kernel.apply(term)
        total += term
        size = float(np.max(np.abs(term)))
        if not math.isfinite(size):
            return _diverged(total, math.inf), n
        if size <= rtol * float(np.max(np.abs(total))):
            return total, n
        if n % GROWTH_WINDOW == 0:
            if window_start > 0.0 and size >= window_start:
                return _diverged(total, (size / window_start) ** (1.0 / GROWTH_WINDOW)), n
            window_start = size
    logger.warning("second-moment series not converged after %d terms", max_terms)
    return total, max_terms


def exact_second_moment(
    spec: DiscreteWalkSpec,
    r: Ratio,
    L: int,
    rtol: float = SERIES_RTOL,
    max_terms: int = 2_000_000,
    depth_rtol: float = 1e-10,
    max_depth: int = 4096,
) -> SeriesSolution:
    """
    s = sum_n K^n eta on levels -L h .. 0, summed until a term falls below
    `rtol` of the partial sum. The killing depth doubles until the
    requested levels agree to `depth_rtol`.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")

    depth = max(2 * L, MIN_DEPTH)
    previous: Optional[np.ndarray] = None
    while True:
        total, terms = _series(killed_kernel(spec, depth, r), rtol, max_terms)
        head = total[-(L + 1):]
        if not np.all(np.isfinite(head)):
            break
        if previous is not None and np.all(np.abs(head - previous) <= depth_rtol * np.abs(head)):
            break
        if depth >= max_depth:
            logger.warning("second moment not stabilised at depth %d", depth)
            break
        previous = head
        depth *= 2

    levels = -spec.step * np.arange(L, -1, -1)
    logger.debug("second moment: depth %d, %d terms", depth, terms)
    return SeriesSolution(levels=levels, values=head, depth=depth, terms=terms)


def restricted_mean(spec: DiscreteWalkSpec, approx: BaseApproximation, a_star: float, L: int) -> SeriesSolution:
    """Crossing probability along paths the shifted sampler can produce."""
    return exact_second_moment(spec, q_support_indicator(approx, a_star), L)
