"""Gaussian increments with negative mean."""

import math
from typing import Callable

from scipy import special

from src.increments.base import IncrementModel, TailClass
from src.utils.random_stream import RandomStream

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class GaussianDrift(IncrementModel):
    name = "gaussian"
    tail_class = TailClass.LIGHT_TAILED

    def __init__(self, mu: float = 1.0, sigma: float = 1.0):
        """X ~ N(-mu, sigma^2), mu > 0."""
        if mu <= 0.0:
            raise ValueError(f"drift mu must be positive, got {mu}")
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.mu = float(mu)
        self.sigma = float(sigma)

    @property
    def mean(self) -> float:
        return -self.mu

    def _z(self, t: float) -> float:
        return (t + self.mu) / self.sigma

    def tail(self, t: float) -> float:
        return float(special.ndtr(-self._z(t)))

    def density(self, t: float) -> float:
        z = self._z(t)
        return _INV_SQRT_2PI * math.exp(-0.5 * z * z) / self.sigma

    def integrated_tail(self, t: float) -> float:
        z = self._z(t)
        phi = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
        return self.sigma * (phi - z * float(special.ndtr(-z)))

    def breakpoints(self):
        return ()

    def inverse_tail(self, q: float) -> float:
        if q >= 1.0:
            return -math.inf
        if q <= 0.0:
            return math.inf
        return -self.mu - self.sigma * float(special.ndtri(q))

    def sample(self, stream: RandomStream) -> float:
        return self.inverse_tail(stream.uniform())

    def log_mgf(self, theta: float) -> float:
        return -theta * self.mu + 0.5 * theta * theta * self.sigma ** 2

    def tilted_sampler(self, theta: float) -> Callable[[RandomStream], float]:
        shifted = -self.mu + theta * self.sigma ** 2

        def draw(stream: RandomStream) -> float:
            return shifted - self.sigma * float(special.ndtri(stream.uniform()))

        return draw

    def describe(self) -> str:
        return f"mu={self.mu:g}, sigma={self.sigma:g}"
