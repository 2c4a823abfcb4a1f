"""Counter-based random streams.

Every uniform variate is a pure function of a key tuple and a counter, so
replicas and coupled members can draw the same numbers in any order. The
mixer is the splitmix64 finaliser chained over the key words; the compiled
kernels implement the identical arithmetic so both backends agree bit for bit.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# stream roles
ROLE_PARTICLE = 1
ROLE_CLOCK_A = 2
ROLE_CLOCK_B = 3
ROLE_THIN_A = 4
ROLE_THIN_B = 5
ROLE_SAMPLER = 6
ROLE_ARROW = 7


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def hash_words(seed: int, a: int, b: int, c: int, d: int) -> int:
    """Hash five 64-bit words (negative ints are taken mod 2**64)."""
    h = mix64(seed + GOLDEN)
    h = mix64(h ^ ((a + GOLDEN) & MASK64))
    h = mix64(h ^ ((b + 2 * GOLDEN) & MASK64))
    h = mix64(h ^ ((c + 3 * GOLDEN) & MASK64))
    h = mix64(h ^ ((d + 4 * GOLDEN) & MASK64))
    return h


def uniform(seed: int, a: int, b: int, c: int, d: int) -> float:
    """Uniform variate in the open interval (0, 1)."""
    return ((hash_words(seed, a, b, c, d) >> 11) + 0.5) * _INV53


class Stream:
    """Sequential view of a keyed stream: the n-th draw uses counter n."""

    def __init__(self, seed: int, role: int, replica: int = 0, sub: int = 0) -> None:
        self.seed = int(seed) & MASK64
        self.role = role
        self.replica = replica
        self.sub = sub
        self.counter = 0

    def random(self) -> float:
        u = uniform(self.seed, self.role, self.replica, self.sub, self.counter)
        self.counter += 1
        return u

    def exponential(self, rate: float) -> float:
        return -math.log(self.random()) / rate


def poisson_times(seed: int, role: int, replica: int, rate: float, horizon: float) -> list[float]:
    """Event times of a rate-``rate`` Poisson process on [0, horizon]."""
    if rate <= 0.0:
        return []
    s = Stream(seed, role, replica)
    out = []
    t = s.exponential(rate)
    while t <= horizon:
        out.append(t)
        t += s.exponential(rate)
    return out
