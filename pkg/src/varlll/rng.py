"""Portable seeded generator and the draw discipline used by the sampler.

The generator is SplitMix64. A weighted value is drawn by taking one 64-bit
output ``u`` and returning the first domain value ``v`` with
``u < floor(2**64 * (w_0 + ... + w_v))``. Uniform binary variables therefore
reduce to the top bit of ``u``.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Sequence

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def thresholds(weights: Sequence[Fraction]) -> tuple[int, ...]:
    """Integer cut points for :func:`draw`; the last one is always ``2**64``."""
    cuts = []
    acc = Fraction(0)
    for w in weights:
        acc += w
        cuts.append((acc.numerator << 64) // acc.denominator)
    return tuple(cuts)


def draw(rng: SplitMix64, cuts: tuple[int, ...]) -> int:
    # one draw per call, even for single-valued domains
    return bisect_right(cuts, rng.next_u64())
