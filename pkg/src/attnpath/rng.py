"""Portable deterministic random number generation.

Everything seeded in this package (corpus synthesis, fold shuffling) draws
from the splitmix64 stream below rather than a platform RNG, so any
implementation that reproduces these constants reproduces our outputs
byte for byte.

splitmix64 (Steele, Lea & Flood 2014), 64-bit wrapping arithmetic:

    state    += 0x9E3779B97F4A7C15
    z         = state
    z         = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z         = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output    = z ^ (z >> 31)

Derived draws:
    randint(n)      = next_u64() % n          (n is tiny here; modulo bias is negligible)
    uniform(lo, hi) = lo + (hi - lo) * next_u64() / 2**64
    shuffle         = Fisher-Yates from the top, j = randint(i + 1)
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Seeded deterministic generator; any integer seed (including 0) is valid."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randint(self, n: int) -> int:
        """Integer in [0, n)."""
        if n < 1:
            raise ValueError(f"randint needs n >= 1, got {n}")
        return self.next_u64() % n

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * (self.next_u64() / 2.0**64)

    def choice(self, seq):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.randint(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
