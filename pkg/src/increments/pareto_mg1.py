"""
M/G/1 increment with Pareto service times.

X = V - A where P(V > t) = (1 + t)^(-alpha) and A is exponential with
rate lam. The default parameters (alpha = 2.5, lam = 3/4) give traffic
intensity 1/2 and EX = -2/3.

Every tail quantity reduces to one integral

    G_p(c) = E[(c + A)^(-p)] = lam * c^(1-p) * S(1-p, lam c),

where S(a, x) = e^x x^(-a) Gamma(a, x) is the scaled upper incomplete gamma
function. S is evaluated by its continued fraction, which stays accurate for
the negative first arguments that show up here (scipy's gammaincc needs
a > 0).
"""

import math

from src.core.errors import NumericFailure, SamplerError
from src.increments.base import TRUNCATION_CAP, IncrementModel, TailClass
from src.utils.random_stream import RandomStream


_CF_MAX_ITER = 5000
_CF_EPS = 2.220446049250313e-16
_CF_BIG = 4.503599627370496e15


def scaled_upper_gamma(a: float, x: float) -> float:
    """
    e^x x^(-a) Gamma(a, x) for x > 0 and any real a.

    Continued fraction of the upper incomplete gamma function (the recurrence
    cephes uses for igamc) without the x^a e^(-x) prefactor.
    """
    if x <= 0.0:
        raise ValueError(f"scaled_upper_gamma needs x > 0, got {x}")

    y = 1.0 - a
    z = x + y + 1.0
    c = 0.0
    pkm2, qkm2 = 1.0, x
    pkm1, qkm1 = x + 1.0, z * x
    ans = pkm1 / qkm1

    for _ in range(_CF_MAX_ITER):
        c += 1.0
        y += 1.0
        z += 2.0
        yc = y * c
        pk = pkm1 * z - pkm2 * yc
        qk = qkm1 * z - qkm2 * yc
        if qk != 0.0:
            r = pk / qk
            err = abs((ans - r) / r)
            ans = r
        else:
            err = 1.0
        pkm2, pkm1 = pkm1, pk
        qkm2, qkm1 = qkm1, qk
        if abs(pk) > _CF_BIG:
            pkm2 *= _CF_EPS
            pkm1 *= _CF_EPS
            qkm2 *= _CF_EPS
            qkm1 *= _CF_EPS
        if err <= _CF_EPS:
            return ans

    raise NumericFailure(
        f"incomplete gamma continued fraction did not converge at a={a}, x={x}",
        achieved=err,
    )


class ParetoMG1(IncrementModel):
    name = "pareto_mg1"
    tail_class = TailClass.REGULARLY_VARYING

    def __init__(self, alpha: float = 2.5, lam: float = 0.75):
        """
        Parameters:
            alpha : Pareto index of the service time, > 1
            lam   : arrival rate; stability needs 1/(alpha-1) < 1/lam
        """
        if alpha <= 1.0:
            raise ValueError(f"alpha must exceed 1, got {alpha}")
        if lam <= 0.0:
            raise ValueError(f"arrival rate must be positive, got {lam}")
        if 1.0 / (alpha - 1.0) >= 1.0 / lam:
            raise ValueError(
                f"unstable queue: service mean {1 / (alpha - 1):.4g} >= "
                f"interarrival mean {1 / lam:.4g}"
            )
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.tail_index = self.alpha
        self._p0 = self._g(self.alpha, 1.0)

    def _g(self, p: float, c: float) -> float:
        return self.lam * c ** (1.0 - p) * scaled_upper_gamma(1.0 - p, self.lam * c)

    @property
    def mean(self) -> float:
        return 1.0 / (self.alpha - 1.0) - 1.0 / self.lam

    def tail(self, t: float) -> float:
        if math.isinf(t):
            return 0.0 if t > 0 else 1.0
        if t >= 0.0:
            return self._g(self.alpha, 1.0 + t)
        return 1.0 - math.exp(self.lam * t) * (1.0 - self._p0)

    def density(self, t: float) -> float:
        if t >= 0.0:
            return self.alpha * self._g(self.alpha + 1.0, 1.0 + t)
        return self.lam * math.exp(self.lam * t) * (1.0 - self._p0)

    def integrated_tail(self, t: float) -> float:
        if math.isinf(t) and t > 0:
            return 0.0
        at_zero = self._g(self.alpha - 1.0, 1.0 + max(t, 0.0)) / (self.alpha - 1.0)
        if t >= 0.0:
            return at_zero
        below = -t - (1.0 - self._p0) * (-math.expm1(self.lam * t)) / self.lam
        return at_zero + below

    def inverse_tail(self, q: float) -> float:
        if self._p0 < q < 1.0:
            return math.log((1.0 - q) / (1.0 - self._p0)) / self.lam
        return super().inverse_tail(q)

    # ---------------------------------------------------------------
    # Sampling
    # ---------------------------------------------------------------

    def sample(self, stream: RandomStream) -> float:
        service = stream.uniform() ** (-1.0 / self.alpha) - 1.0
        arrival = stream.exponential(self.lam)
        return service - arrival

    def sample_truncated(self, stream: RandomStream, lo: float, hi: float) -> float:
        if lo >= 0.0 and math.isinf(hi):
            return self._sample_above(stream, lo)
        if math.isinf(lo) and hi >= 0.0:
            # P(X <= hi) >= P(X <= 0), plain rejection is cheap
            for _ in range(TRUNCATION_CAP):
                x = self.sample(stream)
                if x <= hi:
                    return x
            raise SamplerError(f"{self.name}: rejection below {hi} hit the cap", scheme="truncated")
        return super().sample_truncated(stream, lo, hi)

    def _sample_above(self, stream: RandomStream, c: float) -> float:
        """
        Exact draw of X given X > c >= 0.

        A is drawn with density proportional to lam e^(-lam a) (1 + c + a)^(-alpha)
        by rejection from Exp(lam), then V given V > c + A by Pareto inversion.
        """
        base = 1.0 + c
        for _ in range(TRUNCATION_CAP):
            arrival = stream.exponential(self.lam)
            if stream.uniform() <= (base / (base + arrival)) ** self.alpha:
                service = (base + arrival) * stream.uniform() ** (-1.0 / self.alpha) - 1.0
                return service - arrival
        raise SamplerError(f"{self.name}: rejection above {c} hit the cap", scheme="truncated")

    def describe(self) -> str:
        return f"alpha={self.alpha:g}, lam={self.lam:g}"
