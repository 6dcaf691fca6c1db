"""SplitMix64, the single randomness source of every run.

Outputs follow the reference algorithm (Steele, Lea & Flood 2014), so any
implementation seeded identically reproduces the same stream. Floats take
the top 53 bits.
"""

from __future__ import annotations

import math

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform on [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def normal(self) -> float:
        # Box-Muller, one draw per call
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def unit_vector(self) -> tuple[float, float, float]:
        while True:
            v = (self.normal(), self.normal(), self.normal())
            n = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
            if n > 1e-12:
                return (v[0] / n, v[1] / n, v[2] / n)

    def spawn(self, key: int) -> "SplitMix64":
        """Independent stream for sub-task ``key``; does not advance ``self``."""
        return SplitMix64(SplitMix64(self.state ^ ((key * GOLDEN) & MASK)).next_u64())
