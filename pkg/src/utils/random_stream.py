"""
Counted random streams.

Every replication owns one RandomStream. The stream hands out uniforms one
at a time and counts them, so a run can report how many variates it used
and a replay from the same seed reproduces both draws and counters.
"""

import math
from dataclasses import dataclass, field

import numpy as np


def replication_seed_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    """Stream i of a run seeded with s is SeedSequence([s, i])."""
    return np.random.SeedSequence([int(master_seed), int(index)])


@dataclass
class RandomStream:
    generator: np.random.Generator
    uniforms: int = field(default=0)

    @classmethod
    def from_seed(cls, seed: int) -> "RandomStream":
        return cls(np.random.Generator(np.random.PCG64(seed)))

    @classmethod
    def for_replication(cls, master_seed: int, index: int) -> "RandomStream":
        ss = replication_seed_sequence(master_seed, index)
        return cls(np.random.Generator(np.random.PCG64(ss)))

    def uniform(self) -> float:
        """One draw from (0, 1]."""
        self.uniforms += 1
        return 1.0 - float(self.generator.random())

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform()) / rate
