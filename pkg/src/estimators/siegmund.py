"""
Exponential-tilting estimator for light-tailed increments.

Under the law tilted by theta_star (the positive root of E exp(theta X) = 1)
the walk drifts upward and crosses zero almost surely; on crossing the
likelihood ratio is exp(-theta_star * S_tau), which is at most exp(-theta_star * b).
"""

import logging
import math
from typing import Callable, Optional

from scipy import optimize

from src.core.errors import NotLightTailedError, RunFailure
from src.estimators.bg import DEFAULT_STEP_CAP
from src.estimators.results import RunResult
from src.increments.base import IncrementModel
from src.utils.random_stream import RandomStream

logger = logging.getLogger(__name__)

_THETA_START = 1e-6
_THETA_MAX = 1e6


def solve_theta_star(model: IncrementModel) -> float:
    """Positive root of log E exp(theta X) = 0, to about 1e-12."""
    if model.tail_class.heavy:
        raise NotLightTailedError(f"{model!r} is heavy-tailed: E exp(theta X) = inf for theta > 0")

    f = model.log_mgf
    lo, hi = 0.0, _THETA_START
    value = f(hi)
    if not value < 0.0:
        raise NotLightTailedError(f"log mgf of {model!r} is not negative near 0")

    # grow the bracket until the transform turns positive or blows up
    while math.isfinite(value) and value <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > _THETA_MAX:
            raise NotLightTailedError(f"log mgf of {model!r} has no positive root below {_THETA_MAX:g}")
        value = f(hi)

    # the transform may jump to inf before crossing zero; bisect onto a finite positive value
    for _ in range(200):
        if math.isfinite(value):
            break
        mid = 0.5 * (lo + hi)
        mid_value = f(mid)
        if not math.isfinite(mid_value) or mid_value > 0.0:
            hi, value = mid, mid_value
        else:
            lo = mid
    else:
        raise NotLightTailedError(f"log mgf of {model!r} has no sign change in the search bracket")

    theta = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    logger.info("theta_star=%.12g for %r", theta, model)
    return theta


def siegmund_replicate(
    model: IncrementModel,
    theta_star: float,
    b: float,
    stream: RandomStream,
    tilted: Optional[Callable[[RandomStream], float]] = None,
    step_cap: int = DEFAULT_STEP_CAP,
) -> RunResult:
    if b < 0.0:
        raise ValueError(f"level b must be nonnegative, got {b}")
    draw = tilted if tilted is not None else model.tilted_sampler(theta_star)

    start = stream.uniforms
    s = -b
    for steps in range(1, step_cap + 1):
        s += draw(stream)
        if s > 0.0:
            return RunResult(
                log_R=-theta_star * (b + s),
                crossed=True,
                steps=steps,
                variates=stream.uniforms - start,
            )
    raise RunFailure(f"tilted walk from -{b:g} did not cross within {step_cap} steps")
