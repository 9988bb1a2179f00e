"""Counter-based random streams.

Every stream is a Philox-4x64-10 generator (numpy's ``Philox`` bit generator)
with a 128-bit key and a counter starting at zero:

* key word 0: the 64-bit master seed
* key word 1: ``splitmix64((replication << 24) | (purpose << 16) | group)``

so draws are addressed by ``(seed, replication, purpose, group, draw index)``
and do not depend on the order in which streams are consumed.

Uniforms use the top 53 bits of each 64-bit output, ``u = (x >> 11) + 0.5``
scaled by ``2**-53``, which lies strictly inside ``(0, 1)``. Normal deviates
come from the inverse CDF via Acklam's rational approximation (relative error
below 1.2e-9), one uniform per deviate.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

PURPOSE_SAMPLE = 0
PURPOSE_THEORY = 1
PURPOSE_SIDE = 2


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: a fixed bijective 64-bit mixing function."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, index: int) -> int:
    """Derive a child seed from a master seed and an index."""
    return splitmix64((seed & MASK64) ^ splitmix64(index & MASK64))


def stream_key(seed: int, replication: int = 0, group: int = 0, purpose: int = PURPOSE_SAMPLE) -> int:
    if not 0 <= group < (1 << 16) or not 0 <= purpose < 256 or not 0 <= replication < (1 << 40):
        raise ValueError("stream address out of range")
    word1 = splitmix64((replication << 24) | (purpose << 16) | group)
    return (word1 << 64) | (seed & MASK64)


class Stream:
    """A single keyed stream; successive calls continue along the counter."""

    def __init__(self, seed: int, replication: int = 0, group: int = 0, purpose: int = PURPOSE_SAMPLE):
        self._bitgen = np.random.Philox(key=stream_key(seed, replication, group, purpose))

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(size)

    def uniform(self, size: int) -> np.ndarray:
        x = self.raw(size)
        return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normal(self, size: int) -> np.ndarray:
        return normal_ppf(self.uniform(size))


# Acklam's coefficients
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_ppf(u: np.ndarray) -> np.ndarray:
    """Standard normal quantile function for ``u`` in ``(0, 1)``."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    low = u < _P_LOW
    high = u > 1.0 - _P_LOW
    mid = ~(low | high)

    q = u[mid] - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    out[mid] = num / den

    for mask, sign, p in ((low, 1.0, u[low]), (high, -1.0, 1.0 - u[high])):
        q = np.sqrt(-2.0 * np.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[mask] = sign * num / den
    return out
