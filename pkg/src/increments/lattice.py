"""
Finite-support increments.

Used by the exact oracles: every expectation is a finite sum, so the
estimators can be checked against linear-algebra solutions.
"""

import math
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special

from src.core.errors import SamplerError
from src.increments.base import IncrementModel, TailClass
from src.utils.random_stream import RandomStream


class DiscreteLattice(IncrementModel):
    name = "lattice"
    tail_class = TailClass.DISCRETE_FINITE

    def __init__(self, values: Sequence[float], probs: Sequence[float]):
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("values and probs must be equal-length non-empty lists")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum():.15g}, not 1")

        keep = probs > 0.0
        order = np.argsort(values[keep])
        self.values = values[keep][order]
        self.probs = probs[keep][order]
        if len(np.unique(self.values)) != len(self.values):
            raise ValueError("support points must be distinct")

        self.support_lower = float(self.values[0])
        self._cum = np.cumsum(self.probs)
        self._mean = math.fsum(self.values * self.probs)
        if self._mean >= 0.0:
            raise ValueError(f"mean must be negative, got {self._mean:.6g}")

    @classmethod
    def from_mapping(cls, masses: Mapping[float, float]) -> "DiscreteLattice":
        """DiscreteLattice({-1: 0.7, 1: 0.3})."""
        return cls(list(masses.keys()), list(masses.values()))

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def support_upper(self) -> float:
        return float(self.values[-1])

    def tail(self, t: float) -> float:
        return math.fsum(self.probs[self.values > t])

    def integrated_tail(self, t: float) -> float:
        return math.fsum(np.maximum(self.values - t, 0.0) * self.probs)

    def breakpoints(self) -> Sequence[float]:
        return tuple(self.values)

    def expect(
        self,
        g: Callable[[float], float],
        lo: float = -math.inf,
        hi: float = math.inf,
        breakpoints: Sequence[float] = (),
    ) -> float:
        mask = (self.values > lo) & (self.values <= hi)
        return math.fsum(g(float(x)) * p for x, p in zip(self.values[mask], self.probs[mask]))

    def masses(self, lo: float = -math.inf, hi: float = math.inf):
        """(values, probs) restricted to lo < x <= hi."""
        mask = (self.values > lo) & (self.values <= hi)
        return self.values[mask], self.probs[mask]

    # ---------------------------------------------------------------
    # Sampling
    # ---------------------------------------------------------------

    def inverse_tail(self, q: float) -> float:
        if q >= 1.0:
            return self.support_lower
        if q <= 0.0:
            return math.inf
        # smallest support point x with P(X > x) <= q
        idx = int(np.searchsorted(self._cum, 1.0 - q - 1e-15, side="left"))
        return float(self.values[min(idx, len(self.values) - 1)])

    def sample(self, stream: RandomStream) -> float:
        return self.draw_weighted(stream, self.values, self.probs)

    @staticmethod
    def draw_weighted(stream: RandomStream, values: np.ndarray, weights: np.ndarray) -> float:
        """One uniform, table lookup on the cumulative weights."""
        cum = np.cumsum(weights)
        if cum.size == 0 or cum[-1] <= 0.0:
            raise SamplerError("no mass to draw from", scheme="enumerate")
        u = stream.uniform() * cum[-1]
        idx = int(np.searchsorted(cum, u, side="left"))
        return float(values[min(idx, len(values) - 1)])

    def sample_truncated(self, stream: RandomStream, lo: float, hi: float) -> float:
        vals, probs = self.masses(lo, hi)
        if vals.size == 0:
            raise SamplerError(
                f"{self.name}: empty truncation interval ({lo}, {hi}]", scheme="truncated"
            )
        return self.draw_weighted(stream, vals, probs)

    # ---------------------------------------------------------------
    # Exponential tilting
    # ---------------------------------------------------------------

    def log_mgf(self, theta: float) -> float:
        return float(special.logsumexp(theta * self.values, b=self.probs))

    def tilted_sampler(self, theta: float) -> Callable[[RandomStream], float]:
        logw = theta * self.values + np.log(self.probs)
        weights = np.exp(logw - logw.max())
        weights /= weights.sum()
        values = self.values.copy()

        def draw(stream: RandomStream) -> float:
            return self.draw_weighted(stream, values, weights)

        return draw

    def describe(self) -> str:
        pairs = ", ".join(f"{x:g}:{p:g}" for x, p in zip(self.values, self.probs))
        return "{" + pairs + "}"
