"""
Increment-distribution abstraction.

An IncrementModel is the law of one step X of the random walk. Models are
pure math: they evaluate tails, densities and integrated tails, and know how
to turn uniforms into draws. They hold no simulation state, so one instance
can be shared by any number of concurrent replications.
"""

import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Optional, Sequence

from scipy import optimize

from src.core.errors import NotLightTailedError, NumericFailure, SamplerError
from src.core.quadrature import DEFAULT_QUADRATURE, QuadratureConfig, integrate
from src.utils.random_stream import RandomStream


class TailClass(str, Enum):
    REGULARLY_VARYING = "regularly_varying"
    WEIBULL_TYPE = "weibull_type"
    LIGHT_TAILED = "light_tailed"
    DISCRETE_FINITE = "discrete_finite"

    @property
    def heavy(self) -> bool:
        return self in (TailClass.REGULARLY_VARYING, TailClass.WEIBULL_TYPE)


# rejection loops inside models give up after this many tries
TRUNCATION_CAP = 1_000_000


class IncrementModel(ABC):
    """
    Law of one random-walk increment X with EX < 0.

    Subclasses provide tail, integrated_tail and sample; everything else has
    a generic implementation that subclasses override when a closed form or
    a better sampling recipe exists.
    """

    name: str = "increment"
    tail_class: TailClass
    tail_index: Optional[float] = None
    support_lower: float = -math.inf
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE

    # ---------------------------------------------------------------
    # Distribution
    # ---------------------------------------------------------------

    @property
    @abstractmethod
    def mean(self) -> float:
        ...

    @abstractmethod
    def tail(self, t: float) -> float:
        """P(X > t)."""

    @abstractmethod
    def integrated_tail(self, t: float) -> float:
        """Integral of P(X > s) over s in [t, inf)."""

    def density(self, t: float) -> Optional[float]:
        """f_X(t); None for models without a density."""
        return None

    @property
    def is_continuous(self) -> bool:
        return self.tail_class is not TailClass.DISCRETE_FINITE

    def cdf(self, t: float) -> float:
        return 1.0 - self.tail(t)

    def breakpoints(self) -> Sequence[float]:
        """Points where the density is not smooth."""
        return (0.0,)

    def expect(
        self,
        g: Callable[[float], float],
        lo: float = -math.inf,
        hi: float = math.inf,
        breakpoints: Sequence[float] = (),
    ) -> float:
        """E[g(X); lo < X <= hi] by quadrature against the density."""
        lo = max(lo, self.support_lower)
        if hi <= lo:
            return 0.0
        return integrate(
            lambda t: g(t) * self.density(t),
            lo,
            hi,
            self.quadrature,
            breakpoints=(*self.breakpoints(), *breakpoints),
        )

    # ---------------------------------------------------------------
    # Sampling
    # ---------------------------------------------------------------

    @abstractmethod
    def sample(self, stream: RandomStream) -> float:
        """One draw of X by inversion."""

    def inverse_tail(self, q: float) -> float:
        """Smallest t with P(X > t) <= q, by safeguarded root finding."""
        if q >= 1.0:
            return self.support_lower
        if q <= 0.0:
            return math.inf

        lo = self.support_lower if math.isfinite(self.support_lower) else -1.0
        while self.tail(lo) < q:
            lo = 2.0 * lo - 1.0
        hi = max(lo + 1.0, 1.0)
        while self.tail(hi) > q:
            hi = 2.0 * hi + 1.0
            if hi > 1e300:
                raise NumericFailure(f"{self.name}: no upper bracket for tail {q:.3e}")
        return optimize.brentq(
            lambda t: self.tail(t) - q, lo, hi, xtol=1e-12, rtol=1e-14
        )

    def sample_truncated(self, stream: RandomStream, lo: float, hi: float) -> float:
        """One draw of X given lo < X <= hi, by inversion."""
        t_lo = 1.0 if lo < self.support_lower else self.tail(lo)
        t_hi = self.tail(hi) if math.isfinite(hi) else 0.0
        if t_lo <= t_hi:
            raise SamplerError(
                f"{self.name}: empty truncation interval ({lo}, {hi}]", scheme="truncated"
            )
        q = t_hi + (t_lo - t_hi) * stream.uniform()
        return min(max(self.inverse_tail(q), lo), hi)

    # ---------------------------------------------------------------
    # Light-tailed machinery
    # ---------------------------------------------------------------

    def log_mgf(self, theta: float) -> float:
        """log E exp(theta X) for theta >= 0; +inf where the transform diverges."""
        return 0.0 if theta == 0 else math.inf

    def tilted_sampler(self, theta: float) -> Callable[[RandomStream], float]:
        """Sampler for the exponentially tilted law f_X(t) exp(theta t) / mgf."""
        raise NotLightTailedError(f"{self.name} has no exponential tilting")

    def describe(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"
