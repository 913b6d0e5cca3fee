"""Deterministic 64-bit PRNG for chaos-game sampling.

SplitMix64 (Steele, Lea, Flood 2014): a fixed, documented generator whose
stream depends only on the seed, so orbits replay bit-for-bit on any
platform and Python/NumPy version. Used for symbol sampling; bulk window
sampling for validation uses numpy's seeded Generator instead.
"""

from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53: top 53 bits of the output word map to a double in [0, 1).
_INV53 = 1.0 / (1 << 53)


class SplitMix64:
    """Seeded SplitMix64 stream of 64-bit words and unit doubles."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV53
