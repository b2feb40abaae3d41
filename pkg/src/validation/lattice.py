"""
Exact first-passage probabilities for finite-support walks.

For a walk with jumps on a lattice h*Z, u*(y) = P(the walk from y ever
becomes positive) is the minimal nonnegative solution of

    u(y) = sum_j p_j u(y + x_j),   u = 1 on (0, inf).

Killing the walk below -depth turns this into a banded linear system whose
solution increases to u* as the depth grows; exact_u_star doubles the depth
until the requested levels stop moving.

States are indexed by row = depth + y/h, so row 0 is the deepest level and
row `depth` is y = 0. A jump of j lattice units moves row to row + j.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, List, Mapping, Tuple

import numpy as np
from scipy import linalg

from src.core.errors import UnsupportedInstanceError
from src.increments.lattice import DiscreteLattice

logger = logging.getLogger(__name__)

# ratio(y, z) -> likelihood-ratio factor of the move y -> z
Ratio = Callable[[float, float], float]

_MAX_DENOMINATOR = 10 ** 4
_LATTICE_ATOL = 1e-9
MIN_DEPTH = 64
MAX_DEPTH = 1 << 16


@dataclass(frozen=True)
class DiscreteWalkSpec:
    support: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise ValueError("support and probs must be equal-length non-empty sequences")
        if any(p < 0.0 for p in self.probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(self.probs):.15g}")
        if math.fsum(x * p for x, p in zip(self.support, self.probs)) >= 0.0:
            raise ValueError("walk must have negative mean")

    @classmethod
    def from_mapping(cls, masses: Mapping[float, float]) -> "DiscreteWalkSpec":
        """DiscreteWalkSpec.from_mapping({-1: 0.7, 1: 0.3})."""
        return cls(tuple(float(x) for x in masses), tuple(float(p) for p in masses.values()))

    @property
    def step(self) -> float:
        """Lattice span h: every support point is an integer multiple of h."""
        fractions = []
        for x in self.support:
            fr = Fraction(x).limit_denominator(_MAX_DENOMINATOR)
            if abs(float(fr) - x) > _LATTICE_ATOL * max(1.0, abs(x)):
                raise UnsupportedInstanceError(f"support point {x!r} is not on a rational lattice")
            fractions.append(fr)
        denom = reduce(math.lcm, (f.denominator for f in fractions), 1)
        span = reduce(math.gcd, (abs(f.numerator) * (denom // f.denominator) for f in fractions), 0)
        if span == 0:
            raise UnsupportedInstanceError(f"support {self.support} spans no lattice")
        return span / denom

    @property
    def jumps(self) -> Tuple[int, ...]:
        """Support in units of the lattice step."""
        h = self.step
        return tuple(int(round(x / h)) for x in self.support)

    def model(self) -> DiscreteLattice:
        return DiscreteLattice(self.support, self.probs)


@dataclass(frozen=True)
class ExactSolution:
    levels: np.ndarray        # y values from -L h up to 0, ascending
    u_star: np.ndarray
    depth: int                # truncation depth the values stabilised at
    method: str = "linear"

    @property
    def step(self) -> float:
        return float(self.levels[-1] - self.levels[-2]) if len(self.levels) > 1 else 1.0

    def u(self, y: float) -> float:
        """u*(y); 1 above 0 and 0 below the tabulated range."""
        if y > 0.0:
            return 1.0
        idx = len(self.levels) - 1 - int(round(-y / self.step))
        if idx < 0:
            return 0.0
        return float(self.u_star[idx])

    def __call__(self, y: float) -> float:
        return self.u(y)


# ============================================================
# Killed kernel, stored by jump
# ============================================================

@dataclass
class KilledKernel:
    """
    K(row, row + j) = coeff[j][row] for the continuation levels, and the
    one-step exit weight eta(row) for moves above 0. Moves below row 0 are
    killed.
    """

    depth: int
    step: float
    diagonals: List[Tuple[int, np.ndarray]]
    eta: np.ndarray

    @property
    def levels(self) -> np.ndarray:
        return self.step * (np.arange(self.depth + 1) - self.depth)

    def apply(self, h: np.ndarray) -> np.ndarray:
        out = np.zeros_like(h)
        size = self.depth + 1
        for j, coeff in self.diagonals:
            if j >= 0:
                out[: size - j] += coeff[: size - j] * h[j:]
            else:
                out[-j:] += coeff[-j:] * h[: size + j]
        return out

    def banded(self) -> Tuple[Tuple[int, int], np.ndarray]:
        """(l, u), ab such that I - K is in scipy.linalg.solve_banded form."""
        lower = max([-j for j, _ in self.diagonals] + [0])
        upper = max([j for j, _ in self.diagonals] + [0])
        size = self.depth + 1
        ab = np.zeros((lower + upper + 1, size))
        ab[upper, :] = 1.0
        for j, coeff in self.diagonals:
            # A[i, i + j] lives at ab[upper - j, i + j]
            if j >= 0:
                ab[upper - j, j:] -= coeff[: size - j]
            else:
                ab[upper - j, : size + j] -= coeff[-j:]
        return (lower, upper), ab


def killed_kernel(spec: DiscreteWalkSpec, depth: int, ratio: Ratio = None) -> KilledKernel:
    """
    Kernel of the walk killed below -depth, each move y -> z weighted by
    ratio(y, z) (1 when omitted). Moves whose ratio is infinite carry zero
    probability under the sampling law and are left out.
    """
    h = spec.step
    size = depth + 1
    levels = h * (np.arange(size) - depth)
    eta = np.zeros(size)
    merged = {}
    for j, p in zip(spec.jumps, spec.probs):
        if p == 0.0:
            continue
        coeff = merged.setdefault(j, np.zeros(size))
        for row in range(size):
            target = row + j
            if target < 0:
                continue
            weight = p if ratio is None else p * ratio(levels[row], levels[row] + j * h)
            if not math.isfinite(weight):
                continue
            if target > depth:
                eta[row] += weight
            else:
                coeff[row] += weight
    diagonals = [(j, c) for j, c in sorted(merged.items()) if np.any(c)]
    return KilledKernel(depth=depth, step=h, diagonals=diagonals, eta=eta)


# ============================================================
# First passage
# ============================================================

def _solve_linear(kernel: KilledKernel) -> np.ndarray:
    bands, ab = kernel.banded()
    return linalg.solve_banded(bands, ab, kernel.eta)


def _solve_iteration(kernel: KilledKernel, tol: float = 1e-15, max_sweeps: int = 10_000_000) -> np.ndarray:
    u = np.zeros(kernel.depth + 1)
    for _ in range(max_sweeps):
        nxt = kernel.apply(u) + kernel.eta
        if np.all(np.abs(nxt - u) <= tol * np.abs(nxt)):
            return nxt
        u = nxt
    logger.warning("value iteration stopped after %d sweeps", max_sweeps)
    return u


_METHODS = {"linear": _solve_linear, "iteration": _solve_iteration}


def exact_u_star(
    spec: DiscreteWalkSpec,
    L: int,
    method: str = "linear",
    rtol: float = 1e-10,
) -> ExactSolution:
    """
    u* on the levels -L h .. 0.

    The truncation depth doubles until u at the deepest level is below
    1e-12 u(0) and the requested levels agree to `rtol` between depths.
    """
    solve = _METHODS.get(method)
    if solve is None:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_METHODS)}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    spec.step  # non-lattice supports fail here

    depth = max(2 * L, MIN_DEPTH)
    previous = None
    while True:
        full = solve(killed_kernel(spec, depth))
        head = full[-(L + 1):]
        top = full[-1]
        deep_enough = top == 0.0 or full[0] <= 1e-12 * top
        if previous is not None and deep_enough:
            if np.all(np.abs(head - previous) <= rtol * np.abs(head)):
                break
        if depth >= MAX_DEPTH:
            logger.warning("u* not stabilised at depth %d; returning the last solve", depth)
            break
        previous = head
        depth *= 2

    logger.debug("u* for %s stabilised at depth %d (%s)", spec.support, depth, method)
    levels = -spec.step * np.arange(L, -1, -1)
    return ExactSolution(levels=levels, u_star=np.maximum(head, 0.0), depth=depth, method=method)


def harmonic_residual(spec: DiscreteWalkSpec, solution: ExactSolution) -> float:
    """max |u(y) - sum_j p_j u(y + x_j)| over levels whose jumps stay inside the table."""
    lowest = solution.levels[0]
    low_jump = min(spec.support)
    worst = 0.0
    for y in solution.levels:
        if y + low_jump < lowest - 1e-9 * solution.step:
            continue
        rhs = math.fsum(p * solution.u(y + x) for x, p in zip(spec.support, spec.probs))
        worst = max(worst, abs(solution.u(y) - rhs))
    return worst
