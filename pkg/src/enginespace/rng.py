"""splitmix64: a small, stated, portable PRNG.

Reports must be reproducible bit-for-bit across platforms and Python
versions, so sampling uses this fixed algorithm rather than the stdlib
Mersenne Twister whose convenience methods have changed between releases.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n); exact for arbitrary-precision n."""
        if n <= 0:
            raise ValueError("n must be positive")
        bits = n.bit_length()
        words = (bits + 63) // 64
        while True:
            x = 0
            for _ in range(words):
                x = (x << 64) | self.next_u64()
            x >>= words * 64 - bits
            if x < n:
                return x

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + self.randbelow(hi - lo + 1)


def derive(seed: int, *indices: int) -> int:
    """A decorrelated child seed for (seed, index-path); deterministic."""
    s = seed & _MASK
    for i in indices:
        s = _mix((s ^ (i * _GOLDEN)) & _MASK)
    return s
