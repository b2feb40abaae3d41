"""
Tail approximation v and its one-step smoothing w.

Z is the nonnegative variable with

    P(Z > t) = min(integrated_tail(t) / |EX|, 1)   for t > 0,
    P(Z > t) = 1                                    for t <= 0,

v(y) = P(Z > -y) approximates the probability that the walk started at y
ever becomes positive, and w(y) = E v(y + X) = P(X + Z > -y) is what v looks
like one step later. Their ratio drives both the importance-sampling kernel
and the likelihood ratio of the estimator.
"""

import copy
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, optimize

from src.core.errors import DomainError, NumericFailure
from src.core.quadrature import W_QUADRATURE, QuadratureConfig
from src.increments.base import IncrementModel

logger = logging.getLogger(__name__)

# a run multiplies one table value of w per step, so table errors compound
W_TABLE_RTOL = 1e-7
W_TABLE_CHECKS = 32


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


@dataclass(frozen=True)
class WTable:
    """Cubic spline of log w on a grid uniform in x = log(1 - y), y <= 0."""

    y_lo: float
    y_hi: float
    spline: interpolate.CubicSpline
    # largest |table / quadrature - 1| seen at the checked interval midpoints
    max_rel_error: float = 0.0

    def lookup(self, y: float) -> Optional[float]:
        if not self.y_lo <= y <= self.y_hi:
            return None
        return math.exp(float(self.spline(math.log1p(-y))))


class BaseApproximation:
    """
    v/w evaluator over an increment model.

    Subclasses define z_tail; w, partial_w and the conditional law of X given
    X + Z > beta follow from it.
    """

    def __init__(self, model: IncrementModel, quadrature: QuadratureConfig = W_QUADRATURE):
        self.model = model
        self.quadrature = quadrature
        self._w_table: Optional[WTable] = None

    def z_tail(self, t: float) -> float:
        raise NotImplementedError

    def v(self, y: float) -> float:
        return self.z_tail(-y)

    def log_v(self, y: float) -> float:
        return _safe_log(self.v(y))

    # ---------------------------------------------------------------
    # w = E v(y + X)
    # ---------------------------------------------------------------

    def w(self, y: float) -> float:
        if self._w_table is not None:
            hit = self._w_table.lookup(y)
            if hit is not None:
                return hit
        return self.w_exact(y)

    def w_exact(self, y: float) -> float:
        """w by summation or quadrature, ignoring any table."""
        value = self.partial_w(y, math.inf)
        return min(max(value, 0.0), 1.0)

    def log_w(self, y: float) -> float:
        return _safe_log(self.w(y))

    def partial_w(self, y: float, t: float) -> float:
        """E[v(y + X); X <= t]."""
        return self.model.expect(lambda x: self.v(y + x), hi=t)

    def tabulate_w(self, y_lo: float, y_hi: float = 0.0, resolution: float = 0.01) -> "BaseApproximation":
        """
        Copy of this approximation whose w is read from a spline table on
        [y_lo, y_hi]; points outside the table still go through quadrature.

        Discrete models are summed exactly and are returned unchanged.
        """
        if not self.model.is_continuous:
            return self
        if y_hi > 0.0 or y_lo >= y_hi:
            raise ValueError(f"w table needs y_lo < y_hi <= 0, got [{y_lo}, {y_hi}]")

        x_lo, x_hi = math.log1p(-y_hi), math.log1p(-y_lo)
        count = max(int(math.ceil((x_hi - x_lo) / resolution)) + 1, 4)
        xs = np.linspace(x_lo, x_hi, count)
        log_ws = np.array([math.log(self.w_exact(-math.expm1(x))) for x in xs])
        if not np.all(np.isfinite(log_ws)):
            raise NumericFailure(f"w vanishes inside the table range [{y_lo}, {y_hi}]")

        spline = interpolate.CubicSpline(xs, log_ws)
        stride = max((count - 1) // W_TABLE_CHECKS, 1)
        mids = 0.5 * (xs[:-1] + xs[1:])[::stride]
        max_rel_error = max(
            abs(math.exp(float(spline(x))) / self.w_exact(-math.expm1(x)) - 1.0) for x in mids
        )
        if max_rel_error > W_TABLE_RTOL:
            logger.warning(
                "w table on [%g, %g] is off by %.2e against quadrature (tolerance %.0e); "
                "lower w_resolution",
                y_lo,
                y_hi,
                max_rel_error,
                W_TABLE_RTOL,
            )

        logger.debug("tabulated w on [%g, %g] with %d nodes (max rel error %.2e)", y_lo, y_hi, count, max_rel_error)
        table = copy.copy(self)
        table._w_table = WTable(y_lo, y_hi, spline, max_rel_error)
        return table

    @property
    def has_w_table(self) -> bool:
        return self._w_table is not None

    @property
    def w_table(self) -> Optional[WTable]:
        return self._w_table

    # ---------------------------------------------------------------
    # Conditional law of X given X + Z > beta
    # ---------------------------------------------------------------

    def conditional_cdf(self, beta: float, t: float) -> float:
        """P(X <= t | X + Z > beta) by quadrature."""
        total = self.w_exact(-beta)
        if total <= 0.0:
            raise DomainError(f"P(X + Z > {beta}) vanishes")
        return min(max(self.partial_w(-beta, t) / total, 0.0), 1.0)

    def kappa(self, a_star: float) -> float:
        return self.v(a_star)


class Approximation(BaseApproximation):
    """
    The integrated-tail approximation.

    y0 is the left end of Z's support (0 unless EX^+ > |EX|) and z_atom the
    mass Z puts there.
    """

    def __init__(self, model: IncrementModel, quadrature: QuadratureConfig = W_QUADRATURE):
        super().__init__(model, quadrature)
        self.abs_mean = -model.mean
        self.y0 = self._solve_y0()
        self.z_atom = 1.0 - min(model.integrated_tail(self.y0) / self.abs_mean, 1.0)
        # P(Z > 0) = right limit of z_tail at 0
        self.p_z_positive = 1.0 if self.y0 > 0.0 else 1.0 - self.z_atom
        logger.debug("%r: y0=%.6g z_atom=%.6g", model, self.y0, self.z_atom)

    def _solve_y0(self) -> float:
        excess = lambda t: self.model.integrated_tail(t) - self.abs_mean
        if excess(0.0) <= 0.0:
            return 0.0
        hi = 1.0
        while excess(hi) > 0.0:
            hi *= 2.0
            if hi > 1e300:
                raise NumericFailure("integrated tail never drops below |EX|")
        return optimize.brentq(excess, 0.0, hi, xtol=1e-13, rtol=1e-14)

    def z_tail(self, t: float) -> float:
        if t <= 0.0:
            return 1.0
        return min(self.model.integrated_tail(t) / self.abs_mean, 1.0)

    def partial_w(self, y: float, t: float) -> float:
        if not self.model.is_continuous:
            return super().partial_w(y, t)

        # v(y + x) = 1 exactly when x >= c
        c = -y - self.y0
        below = self.model.expect(
            lambda x: self.model.integrated_tail(-y - x),
            hi=min(t, c),
            breakpoints=(0.0, 0.5 * c, c - 1.0),
        ) / self.abs_mean
        if t <= c:
            return below
        upper = self.model.tail(c) - (self.model.tail(t) if math.isfinite(t) else 0.0)
        return below + upper

    def auxiliary_xi(self, x: float) -> float:
        """integrated_tail(x) / tail(x), the natural overshoot scale beyond x."""
        tail = self.model.tail(x)
        if tail <= 0.0:
            raise DomainError(f"tail of {self.model!r} vanishes at {x}")
        return self.model.integrated_tail(x) / tail

    def __repr__(self) -> str:
        return f"Approximation({self.model!r}, y0={self.y0:.6g})"


class FunctionApproximation(BaseApproximation):
    """Any positive v supplied as a function; used by the exact oracles."""

    def __init__(
        self,
        model: IncrementModel,
        v: Callable[[float], float],
        quadrature: QuadratureConfig = W_QUADRATURE,
        label: str = "custom",
    ):
        super().__init__(model, quadrature)
        self._v = v
        self.label = label

    def z_tail(self, t: float) -> float:
        return self._v(-t)

    def v(self, y: float) -> float:
        return self._v(y)

    def __repr__(self) -> str:
        return f"FunctionApproximation({self.model!r}, {self.label})"
