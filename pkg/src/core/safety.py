"""
Safety-parameter calibration.

The sampler conditions the next increment on X + Z > -y - a_star for a shift
a_star <= 0. The shift is admissible when

    m(y) = (v(y)^2 - w(y)^2) / (P(X > -y) w(y)) + gamma >= 0

for every y <= a_star; then the second moment of the estimator is bounded by
v(-b + a_star)^2 / ((1 - gamma) kappa^2) with kappa = v(a_star).

find_a_star checks the inequality on a finite grid scanned from y_min upward
and keeps the longest feasible prefix.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import pandas as pd

from src.core.approximation import BaseApproximation
from src.core.errors import CalibrationError
from src.increments.base import TailClass

logger = logging.getLogger(__name__)

# v and w closer than this (relative) count as equal
EQUAL_RTOL = 1e-12


@dataclass(frozen=True)
class GridMargin:
    y: float
    v: float
    w: float
    tail: float
    margin: float


@dataclass(frozen=True)
class SafetyParams:
    gamma: float
    a_star: float
    kappa: float
    verified_grid: Tuple[GridMargin, ...] = field(default=(), repr=False)

    @property
    def epsilon(self) -> float:
        return 1.0 - self.gamma

    def margin_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(g.y, g.v, g.w, g.tail, g.margin) for g in self.verified_grid],
            columns=["y", "v", "w", "tail", "margin"],
        )


def default_y_min(b: float = 0.0) -> float:
    return -max(200.0, 2.0 * b)


def margin_at(approx: BaseApproximation, gamma: float, y: float) -> GridMargin:
    """Evaluate the admissibility margin at one point."""
    v = approx.v(y)
    w = approx.w(y)
    tail = approx.model.tail(-y)

    numerator = v * v - w * w
    if abs(v - w) <= EQUAL_RTOL * max(v, w):
        numerator = 0.0

    if numerator == 0.0:
        margin = gamma
    elif tail <= 0.0 or w <= 0.0:
        margin = math.copysign(math.inf, numerator)
    else:
        margin = numerator / (tail * w) + gamma
    return GridMargin(y=y, v=v, w=w, tail=tail, margin=margin)


def find_a_star(
    approx: BaseApproximation,
    gamma: float = 0.5,
    y_min: float | None = None,
    grid_step: float = 0.1,
) -> SafetyParams:
    """
    Largest grid point a_star <= 0 such that the margin is nonnegative on
    every grid point from y_min up to a_star.

    Raises CalibrationError when the first grid point already fails.
    """
    if not 0.0 < gamma < 1.0:
        raise CalibrationError(f"gamma must lie in (0, 1), got {gamma}")
    if grid_step <= 0.0:
        raise CalibrationError(f"grid_step must be positive, got {grid_step}")
    y_min = default_y_min() if y_min is None else y_min
    if y_min >= 0.0:
        raise CalibrationError(f"y_min must be negative, got {y_min}")

    if approx.model.tail_class is TailClass.LIGHT_TAILED:
        logger.warning(
            "%r is light-tailed; the integrated-tail approximation is not "
            "designed for it and the calibrated a_star carries no efficiency guarantee",
            approx.model,
        )

    count = int(math.floor(-y_min / grid_step + 1e-9)) + 1
    # index arithmetic keeps the grid bit-identical across calls
    ys = y_min + grid_step * np.arange(count)
    if ys[-1] < 0.0:
        ys = np.append(ys, 0.0)

    checked = []
    for y in ys:
        point = margin_at(approx, gamma, float(y))
        if point.margin < 0.0:
            if not checked:
                raise CalibrationError(
                    f"inequality fails already at y_min={y_min} (margin {point.margin:.3e}); "
                    "use a deeper y_min or a larger gamma"
                )
            logger.info(
                "first infeasible grid point y=%.4g (margin %.3e)", point.y, point.margin
            )
            break
        checked.append(point)

    a_star = checked[-1].y
    kappa = approx.kappa(a_star)
    logger.info("calibrated a_star=%.6g kappa=%.6e (gamma=%g)", a_star, kappa, gamma)
    return SafetyParams(gamma=gamma, a_star=a_star, kappa=kappa, verified_grid=tuple(checked))


def manual_safety_params(approx: BaseApproximation, gamma: float, a_star: float) -> SafetyParams:
    """SafetyParams for a user-chosen shift, without a grid check."""
    if not 0.0 < gamma < 1.0:
        raise CalibrationError(f"gamma must lie in (0, 1), got {gamma}")
    if a_star > 0.0:
        logger.warning(
            "a_star=%g is positive; the shift is meant to be <= 0 (did you mean %g?)",
            a_star,
            -a_star,
        )
    kappa = approx.kappa(a_star)
    if kappa <= 0.0:
        raise CalibrationError(f"v vanishes at a_star={a_star}")
    return SafetyParams(gamma=gamma, a_star=a_star, kappa=kappa)


def second_moment_bound(safety: SafetyParams, approx: BaseApproximation, b: float) -> float:
    """Upper bound on E R^2 for a run started at -b."""
    v = approx.v(-b + safety.a_star)
    return v * v / (safety.epsilon * safety.kappa ** 2)
