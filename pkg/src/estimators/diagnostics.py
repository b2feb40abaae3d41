"""Post-run diagnostics over several levels."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class CVTrend:
    first: float
    last: float
    log_slope: float      # slope of log cv against log b

    @property
    def improving(self) -> bool:
        return self.last <= self.first


def steps_linearity(levels: Sequence[float], mean_steps: Sequence[float]) -> LinearFit:
    """Least-squares line through (b, mean steps)."""
    x = np.asarray(levels, dtype=float)
    y = np.asarray(mean_steps, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two levels for a linear fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def cv_trend(levels: Sequence[float], cvs: Sequence[float]) -> CVTrend:
    """Reported, not enforced: does the CV shrink as the level grows?"""
    if len(levels) != len(cvs) or len(levels) < 2:
        raise ValueError("need matching levels and cvs, at least two of each")
    order = np.argsort(levels)
    b = np.asarray(levels, dtype=float)[order]
    cv = np.asarray(cvs, dtype=float)[order]
    ok = np.isfinite(cv) & (cv > 0)
    log_slope = float(np.polyfit(np.log(b[ok]), np.log(cv[ok]), 1)[0]) if ok.sum() >= 2 else math.nan
    return CVTrend(first=float(cv[0]), last=float(cv[-1]), log_slope=log_slope)
