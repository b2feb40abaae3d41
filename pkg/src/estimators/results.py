"""
Per-replication results and their aggregation.

Sums go through math.fsum, so a Summary depends only on the multiset of
replication outputs and not on the order workers finished in.
"""

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

Z_95 = 1.96


@dataclass(frozen=True)
class RunResult:
    log_R: float
    crossed: bool
    steps: int
    variates: int
    truncated: bool = False

    @property
    def R(self) -> float:
        return math.exp(self.log_R) if self.crossed else 0.0


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    stderr: float
    cv: float
    ci95: Tuple[float, float]
    mean_steps: float
    mean_variates: float
    wall_time: float = field(default=0.0, compare=False)
    second_moment: float = math.nan
    second_moment_stderr: float = math.nan
    truncated: int = 0

    @property
    def variance(self) -> float:
        return self.stderr ** 2 * self.n

    @property
    def relative_error(self) -> float:
        return self.stderr / self.mean if self.mean > 0 else math.nan


def _mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(results: Sequence[RunResult], wall_time: float = 0.0) -> Summary:
    if not results:
        raise ValueError("cannot summarize zero replications")
    n = len(results)
    rs = [r.R for r in results]

    mean, stderr = _mean_and_stderr(rs)
    second, second_err = _mean_and_stderr([x * x for x in rs])
    cv = stderr * math.sqrt(n) / mean if mean > 0 and not math.isnan(stderr) else math.nan

    return Summary(
        n=n,
        mean=mean,
        stderr=stderr,
        cv=cv,
        ci95=(mean - Z_95 * stderr, mean + Z_95 * stderr),
        mean_steps=math.fsum(r.steps for r in results) / n,
        mean_variates=math.fsum(r.variates for r in results) / n,
        wall_time=wall_time,
        second_moment=second,
        second_moment_stderr=second_err,
        truncated=sum(1 for r in results if r.truncated),
    )
