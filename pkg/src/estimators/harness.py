"""
Replication harness.

A run of n replications at level b is split into contiguous index chunks.
Replication i always draws from the stream seeded by (master seed, i) and
results are put back in index order, so a Summary does not depend on how
many workers produced it.
"""

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from src.core.approximation import Approximation, BaseApproximation
from src.core.conditional_sampler import ConditionalSampler, SamplerScheme
from src.core.config import EstimatorKind, ExperimentConfig
from src.core.errors import RunFailure, SimulationError
from src.core.safety import SafetyParams, default_y_min, find_a_star, manual_safety_params
from src.estimators.bg import bg_replicate
from src.estimators.crude import crude_replicate, default_max_steps
from src.estimators.results import RunResult, Summary, summarize
from src.estimators.siegmund import siegmund_replicate, solve_theta_star
from src.increments.base import IncrementModel
from src.utils.random_stream import RandomStream

logger = logging.getLogger(__name__)


@dataclass
class EstimatorSetup:
    """Everything a replication needs, calibrated once and shared by all levels."""

    kind: EstimatorKind
    model: IncrementModel
    approx: Optional[BaseApproximation] = None
    safety: Optional[SafetyParams] = None
    sampler: Optional[ConditionalSampler] = None
    theta_star: Optional[float] = None
    max_steps: Optional[int] = None
    step_cap: int = 100_000_000

    def replicate(self, b: float, stream: RandomStream, sampler: Optional[ConditionalSampler] = None) -> RunResult:
        if self.kind is EstimatorKind.BG:
            return bg_replicate(self.approx, self.safety, sampler or self.sampler, b, stream, self.step_cap)
        if self.kind is EstimatorKind.SIEGMUND:
            return siegmund_replicate(self.model, self.theta_star, b, stream, step_cap=self.step_cap)
        max_steps = self.max_steps or default_max_steps(self.model, b)
        return crude_replicate(self.model, b, max_steps, stream)


def prepare_setup(config: ExperimentConfig, levels: Optional[Sequence[float]] = None) -> EstimatorSetup:
    """Build the model and run every calibration the estimator needs."""
    levels = list(levels if levels is not None else config.levels)
    model = config.model.build()
    setup = EstimatorSetup(
        kind=config.estimator,
        model=model,
        max_steps=config.max_steps,
        step_cap=config.step_cap,
    )

    if config.estimator is EstimatorKind.SIEGMUND:
        setup.theta_star = solve_theta_star(model)
        return setup
    if config.estimator is EstimatorKind.CRUDE:
        return setup

    cal = config.calibration
    b_max = max(levels) if levels else 0.0
    y_min = cal.y_min if cal.y_min is not None else default_y_min(b_max)
    approx = Approximation(model)

    if model.is_continuous:
        # w is needed at y + a_star for positions down to about -2 b
        lowest_shift = min(cal.a_star, 0.0) if cal.a_star is not None else y_min
        y_lo = -2.0 * b_max + lowest_shift - 50.0
        logger.info("tabulating w on [%.6g, 0]", y_lo)
        approx = approx.tabulate_w(y_lo, 0.0, cal.w_resolution)

    if cal.a_star is not None:
        safety = manual_safety_params(approx, cal.gamma, cal.a_star)
    else:
        safety = find_a_star(approx, cal.gamma, y_min, cal.grid_step)

    sampler = ConditionalSampler(approx, config.sampler)
    if sampler.scheme in (SamplerScheme.REGVAR, SamplerScheme.STRATIFIED) and b_max > 0.0:
        top = b_max - min(safety.a_star, 0.0)
        betas = np.geomspace(max(2.0, sampler.settings.fallback_beta * 2.0), max(top, 4.0), 12)
        sampler.check_acceptance_floor(betas)

    setup.approx = approx
    setup.safety = safety
    setup.sampler = sampler
    return setup


def _run_chunk(setup: EstimatorSetup, b: float, seed: int, start: int, stop: int) -> List[RunResult]:
    sampler = setup.sampler.fresh() if setup.sampler is not None else None
    results = []
    for i in range(start, stop):
        stream = RandomStream.for_replication(seed, i)
        try:
            results.append(setup.replicate(b, stream, sampler))
        except (SimulationError, ArithmeticError, ValueError) as exc:
            raise RunFailure(
                f"replication {i} (seed {seed}) at b={b:g} failed: {exc}", replication=i, seed=seed
            ) from exc
    return results


def _chunks(n: int, workers: int) -> List[tuple]:
    size = max(1, math.ceil(n / (4 * workers)))
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def run_replications(
    setup: EstimatorSetup,
    b: float,
    n: int,
    seed: int,
    workers: Optional[int] = None,
    progress: bool = False,
) -> List[RunResult]:
    workers = workers or os.cpu_count() or 1
    chunks = _chunks(n, workers)
    done: Dict[int, List[RunResult]] = {}
    pbar = tqdm(total=n, desc=f"b={b:g}", disable=not progress)

    if workers == 1 or len(chunks) == 1:
        for lo, hi in chunks:
            done[lo] = _run_chunk(setup, b, seed, lo, hi)
            pbar.update(hi - lo)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_run_chunk, setup, b, seed, lo, hi): (lo, hi) for lo, hi in chunks}
            try:
                for future in as_completed(futures):
                    lo, hi = futures[future]
                    done[lo] = future.result()
                    pbar.update(hi - lo)
            except BaseException:
                for future in futures:
                    future.cancel()
                raise
    pbar.close()

    return [r for lo, _ in chunks for r in done[lo]]


def run_level(
    setup: EstimatorSetup,
    b: float,
    n: int,
    seed: int,
    workers: Optional[int] = None,
    progress: bool = False,
) -> Summary:
    t0 = time.perf_counter()
    results = run_replications(setup, b, n, seed, workers, progress)
    summary = summarize(results, wall_time=time.perf_counter() - t0)
    logger.info(
        "b=%g n=%d mean=%.4e stderr=%.3e cv=%.3g steps=%.1f (%.1fs)",
        b, n, summary.mean, summary.stderr, summary.cv, summary.mean_steps, summary.wall_time,
    )
    return summary


def run_experiment(
    config: ExperimentConfig,
    setup: Optional[EstimatorSetup] = None,
    progress: bool = False,
) -> Dict[float, Summary]:
    """Summary per level, in the order the levels were configured."""
    setup = setup or prepare_setup(config)
    return {
        b: run_level(setup, b, config.n, config.seed, config.workers, progress)
        for b in config.levels
    }
