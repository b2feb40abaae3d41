"""
Thin wrapper around scipy's adaptive quadrature with explicit tolerances.

All numerical integrals in the suite go through `integrate` so that a
non-converged integral surfaces as NumericFailure instead of a warning.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy import integrate as sp_integrate

from src.core.errors import NumericFailure


@dataclass(frozen=True)
class QuadratureConfig:
    epsrel: float = 1e-10
    epsabs: float = 1e-14
    limit: int = 400
    # how far above the requested tolerance the error estimate may land
    slack: float = 1000.0


DEFAULT_QUADRATURE = QuadratureConfig()
W_QUADRATURE = QuadratureConfig(epsrel=1e-8, epsabs=0.0)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
) -> float:
    """
    Integrate f over [a, b] (either end may be infinite).

    Finite breakpoints strictly inside (a, b) split the range into pieces
    that are integrated separately and summed.
    """
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, cfg, breakpoints)

    cuts = sorted(p for p in set(breakpoints) if a < p < b and math.isfinite(p))
    edges = [a, *cuts, b]

    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
            value, err = sp_integrate.quad(
                f, lo, hi, epsabs=cfg.epsabs, epsrel=cfg.epsrel, limit=cfg.limit
            )[:2]
        total += value
        total_err += err

    if not math.isfinite(total):
        raise NumericFailure(f"quadrature over [{a}, {b}] produced {total}")

    allowed = cfg.slack * max(cfg.epsabs, cfg.epsrel * abs(total))
    if total_err > allowed and total_err > 1e-300:
        raise NumericFailure(
            f"quadrature over [{a}, {b}] did not converge to rel {cfg.epsrel:g}",
            achieved=total_err,
        )
    return total
