"""
Goodness of fit of the conditional samplers.

Draws of X given X + Z > beta are compared by a Kolmogorov-Smirnov test
with the quadrature CDF, which is evaluated at sample quantiles and
interpolated linearly in between.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from src.core.approximation import BaseApproximation
from src.core.conditional_sampler import ConditionalSampler, SamplerScheme, SamplerSettings
from src.utils.random_stream import RandomStream

logger = logging.getLogger(__name__)

DEFAULT_BETAS = (5.0, 30.0, 100.0)
REFERENCE_POINTS = 400
MIN_ACCEPTANCE = 0.01


@dataclass(frozen=True)
class KSResult:
    beta: float
    scheme: str
    draws: int
    acceptance: float
    statistic: float
    pvalue: float
    skipped: bool = False

    def passed(self, alpha: float = 0.01) -> bool:
        return self.skipped or self.pvalue > alpha


def reference_cdf(approx: BaseApproximation, beta: float, sample: np.ndarray, points: int = REFERENCE_POINTS):
    """Piecewise-linear P(X <= t | X + Z > beta) through the sample quantiles, min and max included."""
    ts = np.unique(np.quantile(sample, np.linspace(0.0, 1.0, points)))
    fs = np.array([approx.conditional_cdf(beta, float(t)) for t in ts])
    fs = np.maximum.accumulate(fs)
    return lambda x: np.interp(x, ts, fs, left=0.0, right=1.0)


def draw_conditional(sampler: ConditionalSampler, beta: float, count: int, seed: int) -> np.ndarray:
    stream = RandomStream.from_seed(seed)
    return np.array([sampler.sample(beta, stream) for _ in range(count)])


def default_schemes(approx: BaseApproximation) -> List[SamplerScheme]:
    """The scheme auto-selection picks for this model, plus plain acceptance-rejection."""
    auto = ConditionalSampler(approx).scheme
    return [auto] if auto is SamplerScheme.NAIVE else [SamplerScheme.NAIVE, auto]


def ks_test(
    approx: BaseApproximation,
    scheme: SamplerScheme,
    beta: float,
    draws: int = 100_000,
    seed: int = 0,
    settings: Optional[SamplerSettings] = None,
) -> KSResult:
    settings = settings or SamplerSettings()
    sampler = ConditionalSampler(approx, replace(settings, scheme=scheme))
    acceptance = sampler.acceptance_probability(beta)
    naive_refused = scheme is SamplerScheme.NAIVE and beta > settings.naive_beta_ceiling
    if naive_refused or acceptance < MIN_ACCEPTANCE:
        logger.info("%s at beta=%g skipped (acceptance %.3g)", scheme.value, beta, acceptance)
        return KSResult(beta, scheme.value, 0, acceptance, float("nan"), float("nan"), skipped=True)

    sample = draw_conditional(sampler, beta, draws, seed)
    result = stats.kstest(sample, reference_cdf(approx, beta, sample))
    logger.debug("%s beta=%g: D=%.4g p=%.4g", scheme.value, beta, result.statistic, result.pvalue)
    return KSResult(beta, scheme.value, draws, acceptance, float(result.statistic), float(result.pvalue))


def run_sampler_tests(
    approx: BaseApproximation,
    betas: Sequence[float] = DEFAULT_BETAS,
    schemes: Optional[Sequence[SamplerScheme]] = None,
    draws: int = 100_000,
    seed: int = 0,
    settings: Optional[SamplerSettings] = None,
) -> List[KSResult]:
    schemes = list(schemes) if schemes else default_schemes(approx)
    return [
        ks_test(approx, scheme, float(beta), draws, seed + k, settings)
        for k, (beta, scheme) in enumerate((b, s) for b in betas for s in schemes)
    ]


def results_frame(results: Sequence[KSResult], alpha: float = 0.01) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (r.beta, r.scheme, r.draws, r.acceptance, r.statistic, r.pvalue,
             "SKIP" if r.skipped else ("PASS" if r.passed(alpha) else "FAIL"))
            for r in results
        ],
        columns=["beta", "scheme", "draws", "acceptance", "ks_stat", "pvalue", "status"],
    )
