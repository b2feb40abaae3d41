"""
Draws from the importance-sampling increment law

    P(Y in dt) = P(X in dt | X + Z > beta) = f_X(t) P(Z > beta - t) dt / w(-beta)

by acceptance-rejection. Four schemes:

    NAIVE       propose X, accept with P(Z > beta - X); acceptance w(-beta)
                vanishes as beta grows, so it is only used for small beta
    REGVAR      two-piece mixture split at (1 - theta) beta, for regularly
                varying increments
    STRATIFIED  piecewise-constant envelope on strata of width sqrt(beta),
                for Weibull-type increments
    ENUMERATE   exact weighted draw for finite-support increments
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.core.approximation import BaseApproximation
from src.core.errors import CalibrationError, SamplerError
from src.increments.base import TailClass
from src.increments.lattice import DiscreteLattice
from src.utils.random_stream import RandomStream

logger = logging.getLogger(__name__)


class SamplerScheme(str, Enum):
    AUTO = "auto"
    NAIVE = "naive"
    REGVAR = "regvar"
    STRATIFIED = "stratified"
    ENUMERATE = "enumerate"


AUTO_SCHEMES = {
    TailClass.REGULARLY_VARYING: SamplerScheme.REGVAR,
    TailClass.WEIBULL_TYPE: SamplerScheme.STRATIFIED,
    TailClass.LIGHT_TAILED: SamplerScheme.NAIVE,
    TailClass.DISCRETE_FINITE: SamplerScheme.ENUMERATE,
}


@dataclass(frozen=True)
class SamplerSettings:
    scheme: SamplerScheme = SamplerScheme.AUTO
    theta: float = 0.5
    proposal_cap: int = 1_000_000
    naive_beta_ceiling: float = 50.0
    acceptance_floor: float = 0.05
    m_safety_factor: float = 1.1
    beta_quantum: float = 1e-6
    # specialised schemes hand beta <= fallback_beta to NAIVE
    fallback_beta: float = 1.0
    # dominating constant of the REGVAR scheme; calibrated when None
    m: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.proposal_cap < 1:
            raise ValueError(f"proposal_cap must be >= 1, got {self.proposal_cap}")


@dataclass
class SamplerStats:
    draws: int = 0
    proposals: int = 0
    acceptances: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.acceptances / self.proposals if self.proposals else math.nan


@dataclass(frozen=True)
class Envelope:
    """Piecewise-constant dominating function for one quantised beta."""

    beta: float
    lo: np.ndarray
    hi: np.ndarray
    level: np.ndarray
    weight: np.ndarray

    @property
    def mass(self) -> float:
        return math.fsum(self.weight)


_ENVELOPE_CACHE_SIZE = 4096


def default_m_betas(beta_max: float = 1e5, fallback_beta: float = 1.0) -> np.ndarray:
    lo = max(fallback_beta, 1.0)
    count = max(int(math.ceil(8 * math.log10(beta_max / lo))) + 1, 2)
    return np.geomspace(lo, beta_max, count)


class ConditionalSampler:
    def __init__(self, approx: BaseApproximation, settings: SamplerSettings = SamplerSettings()):
        self.approx = approx
        self.model = approx.model
        self.settings = settings
        self.scheme = self._resolve_scheme(settings.scheme)
        self.stats = SamplerStats()
        self.m = settings.m
        self._envelopes: Dict[int, Envelope] = {}

        if self.scheme is SamplerScheme.REGVAR and self.m is None:
            self.m = self.calibrate_m(default_m_betas(fallback_beta=settings.fallback_beta))

    def _resolve_scheme(self, scheme: SamplerScheme) -> SamplerScheme:
        tail_class = self.model.tail_class
        if scheme is SamplerScheme.AUTO:
            scheme = AUTO_SCHEMES[tail_class]
            if tail_class is TailClass.LIGHT_TAILED:
                logger.warning(
                    "%r is light-tailed; conditional draws fall back to the naive scheme",
                    self.model,
                )
        if scheme is SamplerScheme.ENUMERATE and self.model.is_continuous:
            raise SamplerError("enumerate needs a finite-support model", scheme=scheme.value)
        if scheme in (SamplerScheme.REGVAR, SamplerScheme.STRATIFIED) and not self.model.is_continuous:
            raise SamplerError(f"{scheme.value} needs a continuous model", scheme=scheme.value)
        return scheme

    def fresh(self) -> "ConditionalSampler":
        """Same configuration and calibrated m, zeroed counters and cache."""
        return ConditionalSampler(self.approx, replace(self.settings, scheme=self.scheme, m=self.m))

    # ---------------------------------------------------------------
    # Entry point
    # ---------------------------------------------------------------

    def sample(self, beta: float, stream: RandomStream) -> float:
        """One draw of X given X + Z > beta."""
        self.stats.draws += 1
        lower = self.model.support_lower
        if math.isfinite(lower) and self.approx.z_tail(beta - lower) >= 1.0:
            # conditioning on a sure event
            self.stats.proposals += 1
            self.stats.acceptances += 1
            return self.model.sample(stream)

        scheme = self.scheme
        if scheme is SamplerScheme.ENUMERATE:
            return self._enumerate(beta, stream)
        if scheme in (SamplerScheme.REGVAR, SamplerScheme.STRATIFIED) and beta <= self.settings.fallback_beta:
            scheme = SamplerScheme.NAIVE
        elif scheme is SamplerScheme.NAIVE and beta > self.settings.naive_beta_ceiling:
            raise SamplerError(
                f"naive acceptance-rejection refused at beta={beta:.4g} "
                f"(ceiling {self.settings.naive_beta_ceiling:g})",
                beta=beta,
                scheme=scheme.value,
            )

        if scheme is SamplerScheme.NAIVE:
            return self.naive_ar(beta, stream)
        if scheme is SamplerScheme.REGVAR:
            return self._accept_loop(beta, stream, self.propose_regvar, scheme)
        return self._accept_loop(beta, stream, self.propose_stratified, scheme)

    def _accept_loop(self, beta, stream, propose, scheme: SamplerScheme) -> float:
        for _ in range(self.settings.proposal_cap):
            candidate, accept_prob = propose(beta, stream)
            self.stats.proposals += 1
            if stream.uniform() <= accept_prob:
                self.stats.acceptances += 1
                return candidate
        raise SamplerError(
            f"{scheme.value}: {self.settings.proposal_cap} proposals without acceptance "
            f"at beta={beta:.6g}",
            beta=beta,
            scheme=scheme.value,
        )

    # ---------------------------------------------------------------
    # Schemes
    # ---------------------------------------------------------------

    def naive_ar(self, beta: float, stream: RandomStream) -> float:
        for _ in range(self.settings.proposal_cap):
            x = self.model.sample(stream)
            self.stats.proposals += 1
            if stream.uniform() <= self.approx.z_tail(beta - x):
                self.stats.acceptances += 1
                return x
        raise SamplerError(
            f"naive: {self.settings.proposal_cap} proposals without acceptance at beta={beta:.6g}",
            beta=beta,
            scheme=SamplerScheme.NAIVE.value,
        )

    def _enumerate(self, beta: float, stream: RandomStream) -> float:
        model = self.model
        assert isinstance(model, DiscreteLattice)
        weights = model.probs * np.array([self.approx.z_tail(beta - x) for x in model.values])
        self.stats.proposals += 1
        self.stats.acceptances += 1
        return model.draw_weighted(stream, model.values, weights)

    def regvar_weights(self, beta: float) -> Tuple[float, float, float]:
        """(c(beta), lambda_0, lambda_1) of the two-piece mixture."""
        split = (1.0 - self.settings.theta) * beta
        z_beta = self.approx.z_tail(beta)
        lower = self.model.cdf(split) * self.approx.z_tail(self.settings.theta * beta) / z_beta
        upper = self.model.tail(split) / z_beta
        c = lower + upper
        return c, lower / c, upper / c

    def propose_regvar(self, beta: float, stream: RandomStream) -> Tuple[float, float]:
        """
        Candidate from the mixture
            lambda_0 * law(X | X <= (1-theta) beta) + lambda_1 * law(X | X > (1-theta) beta)
        and the probability of accepting it.
        """
        theta = self.settings.theta
        split = (1.0 - theta) * beta
        _, lam0, _ = self.regvar_weights(beta)

        ratio = self.approx.z_tail(beta) / self.approx.w(-beta)
        if ratio > self.m * (1.0 + 1e-9):
            raise SamplerError(
                f"regvar: dominating constant m={self.m:.4g} below "
                f"P(Z>beta)/P(X+Z>beta)={ratio:.4g}",
                beta=beta,
                scheme=SamplerScheme.REGVAR.value,
            )
        scale = ratio / self.m

        if stream.uniform() <= lam0:
            x = self.model.sample_truncated(stream, -math.inf, split)
            accept = self.approx.z_tail(beta - x) / self.approx.z_tail(theta * beta) * scale
        else:
            x = self.model.sample_truncated(stream, split, math.inf)
            accept = self.approx.z_tail(beta - x) * scale
        return x, min(accept, 1.0)

    def calibrate_m(self, betas: Sequence[float]) -> float:
        """Safety factor times the largest P(Z > beta) / P(X + Z > beta) on the grid."""
        ratios = []
        for beta in betas:
            w = self.approx.w(-beta)
            if w <= 0.0:
                raise CalibrationError(f"P(X+Z>{beta:g}) vanishes; cannot calibrate m")
            ratios.append(self.approx.z_tail(beta) / w)
        m = self.settings.m_safety_factor * max(max(ratios), 1.0 / self.settings.m_safety_factor)
        logger.info("regvar dominating constant m=%.6g over %d betas", m, len(ratios))
        return m

    # ---------------------------------------------------------------
    # Stratified envelope
    # ---------------------------------------------------------------

    def _quantise(self, beta: float) -> Tuple[int, float]:
        step = self.settings.beta_quantum
        key = math.floor(math.log(beta) / step)
        beta_q = math.exp(key * step)
        while beta_q > beta:
            key -= 1
            beta_q = math.exp(key * step)
        return key, beta_q

    def envelope(self, beta: float) -> Envelope:
        """Envelope built on the quantised beta_q <= beta; dominates the target at beta."""
        key, beta_q = self._quantise(beta)
        cached = self._envelopes.get(key)
        if cached is not None:
            return cached

        approx, model = self.approx, self.model
        width = math.sqrt(beta_q)
        strata = int(math.floor(width))

        edges = [(model.support_lower, 0.0, approx.z_tail(beta_q))]
        for k in range(strata):
            edges.append((k * width, (k + 1) * width, approx.z_tail(beta_q - (k + 1) * width)))
        edges.append((strata * width, beta_q, self._z_positive()))
        edges.append((beta_q, math.inf, 1.0))

        lo = np.array([e[0] for e in edges])
        hi = np.array([e[1] for e in edges])
        level = np.array([e[2] for e in edges])
        mass = np.array([self._piece_mass(a, b) for a, b in zip(lo, hi)])
        env = Envelope(beta=beta_q, lo=lo, hi=hi, level=level, weight=mass * level)

        if len(self._envelopes) >= _ENVELOPE_CACHE_SIZE:
            self._envelopes.clear()
        self._envelopes[key] = env
        logger.debug("envelope at beta=%.6g: %d pieces, mass %.4e", beta_q, len(edges), env.mass)
        return env

    def _piece_mass(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        upper = self.model.tail(hi) if math.isfinite(hi) else 0.0
        return max(self.model.tail(lo) - upper, 0.0)

    def _z_positive(self) -> float:
        p = getattr(self.approx, "p_z_positive", None)
        return 1.0 if p is None else p

    def propose_stratified(self, beta: float, stream: RandomStream) -> Tuple[float, float]:
        env = self.envelope(beta)
        cum = np.cumsum(env.weight)
        u = stream.uniform() * cum[-1]
        piece = min(int(np.searchsorted(cum, u, side="left")), len(cum) - 1)
        x = self.model.sample_truncated(stream, env.lo[piece], env.hi[piece])
        accept = self.approx.z_tail(beta - x) / env.level[piece]
        return x, min(accept, 1.0)

    # ---------------------------------------------------------------
    # Diagnostics
    # ---------------------------------------------------------------

    def acceptance_probability(self, beta: float) -> float:
        """Theoretical per-proposal acceptance of the scheme used at beta."""
        if self.scheme is SamplerScheme.ENUMERATE:
            return 1.0
        w = self.approx.w(-beta)
        if self.scheme is SamplerScheme.NAIVE or beta <= self.settings.fallback_beta:
            return w
        if self.scheme is SamplerScheme.REGVAR:
            c, _, _ = self.regvar_weights(beta)
            return 1.0 / (self.m * c)
        return w / self.envelope(beta).mass

    def conditional_cdf(self, beta: float, t: float) -> float:
        return self.approx.conditional_cdf(beta, t)

    def conditional_cdf_table(self, beta: float, ts: Sequence[float]) -> np.ndarray:
        return np.array([self.conditional_cdf(beta, float(t)) for t in ts])

    def check_acceptance_floor(self, betas: Sequence[float]) -> float:
        """Smallest theoretical acceptance over betas; warns below the configured floor."""
        worst = min(self.acceptance_probability(float(b)) for b in betas)
        if worst < self.settings.acceptance_floor:
            logger.warning(
                "%s acceptance %.3g below floor %.3g",
                self.scheme.value,
                worst,
                self.settings.acceptance_floor,
            )
        return worst
