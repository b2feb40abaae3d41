"""
Difference of exponentials (M/M/1 increments).

X = V - A with V ~ Exp(mu) and A ~ Exp(lam), lam < mu. Light-tailed; the
maximum of the walk has the closed form P(M > b) = (lam/mu) exp(-(mu-lam) b).
"""

import math
from typing import Callable

from src.increments.base import IncrementModel, TailClass
from src.utils.random_stream import RandomStream


class ExpDiff(IncrementModel):
    name = "exp_diff"
    tail_class = TailClass.LIGHT_TAILED

    def __init__(self, mu: float = 1.0, lam: float = 0.5):
        if mu <= 0.0 or lam <= 0.0:
            raise ValueError(f"rates must be positive, got mu={mu}, lam={lam}")
        if lam >= mu:
            raise ValueError(f"need lam < mu for negative drift, got lam={lam}, mu={mu}")
        self.mu = float(mu)
        self.lam = float(lam)
        self._up = self.lam / (self.lam + self.mu)
        self._down = self.mu / (self.lam + self.mu)

    @property
    def mean(self) -> float:
        return 1.0 / self.mu - 1.0 / self.lam

    def tail(self, t: float) -> float:
        if t >= 0.0:
            return self._up * math.exp(-self.mu * t)
        return 1.0 - self._down * math.exp(self.lam * t)

    def density(self, t: float) -> float:
        scale = self.lam * self.mu / (self.lam + self.mu)
        if t >= 0.0:
            return scale * math.exp(-self.mu * t)
        return scale * math.exp(self.lam * t)

    def integrated_tail(self, t: float) -> float:
        if t >= 0.0:
            return self._up / self.mu * math.exp(-self.mu * t)
        return self._up / self.mu - t - self._down / self.lam * (-math.expm1(self.lam * t))

    def inverse_tail(self, q: float) -> float:
        if q >= 1.0:
            return -math.inf
        if q <= 0.0:
            return math.inf
        if q <= self._up:
            return -math.log(q / self._up) / self.mu
        return math.log((1.0 - q) / self._down) / self.lam

    def sample(self, stream: RandomStream) -> float:
        return self.inverse_tail(stream.uniform())

    def exact_tail_of_max(self, b: float) -> float:
        """P(M > b) for b >= 0."""
        return self.lam / self.mu * math.exp(-(self.mu - self.lam) * b)

    # ---------------------------------------------------------------
    # Exponential tilting
    # ---------------------------------------------------------------

    def log_mgf(self, theta: float) -> float:
        if theta >= self.mu or theta <= -self.lam:
            return math.inf
        return math.log(self.mu / (self.mu - theta)) + math.log(self.lam / (self.lam + theta))

    def tilted_sampler(self, theta: float) -> Callable[[RandomStream], float]:
        # tilting V - A by theta keeps both parts exponential
        up_rate = self.mu - theta
        down_rate = self.lam + theta

        def draw(stream: RandomStream) -> float:
            return stream.exponential(up_rate) - stream.exponential(down_rate)

        return draw

    def describe(self) -> str:
        return f"mu={self.mu:g}, lam={self.lam:g}"
