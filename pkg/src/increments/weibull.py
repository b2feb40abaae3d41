"""
Weibull-type service with deterministic inter-arrival times.

X = V - d with P(V > t) = exp(-c t^k), 0 < k < 1. The defaults
(c = 2, k = 1/2, d = 1) give P(X > t) = exp(-2 sqrt(t + 1)) and EX = -1/2.
"""

import math
from typing import Callable, Sequence

from scipy import special

from src.core.quadrature import integrate
from src.increments.base import IncrementModel, TailClass
from src.utils.random_stream import RandomStream


class WeibullDetArrival(IncrementModel):
    name = "weibull_det"
    tail_class = TailClass.WEIBULL_TYPE

    def __init__(self, coef: float = 2.0, shape: float = 0.5, interarrival: float = 1.0):
        """
        Parameters:
            coef         : c in exp(-c t^k), > 0
            shape        : k in (0, 1); k >= 1 is not heavy-tailed
            interarrival : deterministic gap d between arrivals, > EV
        """
        if coef <= 0.0:
            raise ValueError(f"coef must be positive, got {coef}")
        if not 0.0 < shape < 1.0:
            raise ValueError(f"shape must lie in (0, 1), got {shape}")
        self.coef = float(coef)
        self.shape = float(shape)
        self.interarrival = float(interarrival)
        self.support_lower = -self.interarrival

        inv = 1.0 / self.shape
        # integral of exp(-c s^k) over s > u equals _scale * Q(1/k, c u^k)
        self._scale = math.gamma(inv) / (self.shape * self.coef ** inv)
        if self.mean >= 0.0:
            raise ValueError(
                f"interarrival {interarrival} does not exceed the service mean "
                f"{self._scale:.4g}"
            )

    @property
    def mean(self) -> float:
        return self._scale - self.interarrival

    def _u(self, t: float) -> float:
        return t + self.interarrival

    def tail(self, t: float) -> float:
        u = self._u(t)
        if u <= 0.0:
            return 1.0
        return math.exp(-self.coef * u ** self.shape)

    def density(self, t: float) -> float:
        u = self._u(t)
        if u <= 0.0:
            return 0.0
        uk = u ** self.shape
        return self.coef * self.shape * uk / u * math.exp(-self.coef * uk)

    def integrated_tail(self, t: float) -> float:
        u = self._u(t)
        if u <= 0.0:
            return -u + self._scale
        return self._scale * float(special.gammaincc(1.0 / self.shape, self.coef * u ** self.shape))

    def breakpoints(self) -> Sequence[float]:
        return (self.support_lower,)

    def expect(
        self,
        g: Callable[[float], float],
        lo: float = -math.inf,
        hi: float = math.inf,
        breakpoints: Sequence[float] = (),
    ) -> float:
        """
        E[g(X); lo < X <= hi] in the variable s = c (X + d)^k, where the
        density becomes exp(-s) and its singularity at the support minimum
        disappears.
        """
        lo = max(lo, self.support_lower)
        if hi <= lo:
            return 0.0

        def to_s(t: float) -> float:
            if math.isinf(t):
                return math.inf
            return self.coef * max(self._u(t), 0.0) ** self.shape

        def to_t(s: float) -> float:
            return (s / self.coef) ** (1.0 / self.shape) - self.interarrival

        cuts = [to_s(p) for p in breakpoints if lo < p < hi]
        return integrate(
            lambda s: g(to_t(s)) * math.exp(-s),
            to_s(lo),
            to_s(hi),
            self.quadrature,
            breakpoints=cuts,
        )

    def inverse_tail(self, q: float) -> float:
        if q >= 1.0:
            return self.support_lower
        if q <= 0.0:
            return math.inf
        return (-math.log(q) / self.coef) ** (1.0 / self.shape) - self.interarrival

    def sample(self, stream: RandomStream) -> float:
        return self.inverse_tail(stream.uniform())

    def describe(self) -> str:
        return f"coef={self.coef:g}, shape={self.shape:g}, interarrival={self.interarrival:g}"
