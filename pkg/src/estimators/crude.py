"""Crude Monte Carlo under the original law, truncated at max_steps."""

import math

from src.estimators.results import RunResult
from src.increments.base import IncrementModel
from src.utils.random_stream import RandomStream


def default_max_steps(model: IncrementModel, b: float) -> int:
    return max(int(math.ceil(20.0 * b / abs(model.mean))), 1)


def crude_replicate(model: IncrementModel, b: float, max_steps: int, stream: RandomStream) -> RunResult:
    """R = 1 if the walk from -b becomes positive within max_steps, else 0 (biased low)."""
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")

    start = stream.uniforms
    s = -b
    for steps in range(1, max_steps + 1):
        s += model.sample(stream)
        if s > 0.0:
            return RunResult(log_R=0.0, crossed=True, steps=steps, variates=stream.uniforms - start)
    return RunResult(
        log_R=-math.inf,
        crossed=False,
        steps=max_steps,
        variates=stream.uniforms - start,
        truncated=True,
    )
