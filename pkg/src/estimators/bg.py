"""
State-dependent importance sampler for P(M > b) with heavy-tailed increments.

From S_0 = -b the walk moves under the kernel

    Q(y, dz) = P(X in dz - y) v(z + a_star) / w(y + a_star),

i.e. the next increment is X conditioned on X + Z > -y - a_star, and the
likelihood ratio picks up w(y + a_star) / v(s + a_star) per step. The
product at the first positive position is an unbiased estimate of P(M > b).
Ratios are accumulated in log space.
"""

from src.core.approximation import BaseApproximation
from src.core.conditional_sampler import ConditionalSampler
from src.core.errors import RunFailure
from src.core.safety import SafetyParams
from src.estimators.results import RunResult
from src.utils.random_stream import RandomStream

DEFAULT_STEP_CAP = 100_000_000


def bg_replicate(
    approx: BaseApproximation,
    safety: SafetyParams,
    sampler: ConditionalSampler,
    b: float,
    stream: RandomStream,
    step_cap: int = DEFAULT_STEP_CAP,
) -> RunResult:
    if b <= 0.0:
        raise ValueError(f"level b must be positive, got {b}")

    a_star = safety.a_star
    start = stream.uniforms
    s = -b
    log_r = 0.0
    steps = 0

    while True:
        y = s
        beta = -y - a_star
        s = y + sampler.sample(beta, stream)
        log_r += approx.log_w(y + a_star) - approx.log_v(s + a_star)
        steps += 1
        if s > 0.0:
            return RunResult(log_R=log_r, crossed=True, steps=steps, variates=stream.uniforms - start)
        if steps >= step_cap:
            raise RunFailure(f"no crossing after {step_cap} steps from -{b:g} (position {s:.6g})")
