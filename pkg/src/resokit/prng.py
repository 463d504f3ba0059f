"""Seeded 64-bit splitmix-style PRNG, counter-based.

Counter-based generation keeps scalar draws and vectorized blocks on the
same stream: value k of a seed is mix64(seed + (k+1)*GOLDEN), so batch size
and threading cannot change what is drawn.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK
        self._i = 0

    def next_u64(self) -> int:
        self._i += 1
        return _mix(self._seed + self._i * _GOLDEN)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u

    def uniforms(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """Next n uniforms as one block, same values as n scalar draws."""
        idx = self._i + 1 + np.arange(n, dtype=np.uint64)
        self._i += n
        z = _mix_array(np.uint64(self._seed) + idx * np.uint64(_GOLDEN))
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return lo + (hi - lo) * u
