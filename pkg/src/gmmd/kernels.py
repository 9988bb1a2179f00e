"""Bounded characteristic kernels and Gram-block evaluation.

Two families are supported, both with ``sup K = 1``:

* ``gaussian``:  ``K(x, y) = exp(-||x - y||_2^2 / (2 h^2))``
* ``laplacian``: ``K(x, y) = exp(-||x - y||_1 / h)``

Points are handled as ``(n, d)`` float arrays. A single point may be passed as a
1-d array of length ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist, pdist

from gmmd.errors import InputError

KernelFamily = Literal["gaussian", "laplacian"]
FAMILIES: tuple[str, ...] = ("gaussian", "laplacian")

# rows per chunk when filling large Gram blocks; entries are independent so
# chunking never changes the result
_ROW_CHUNK = 4096


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = "gaussian"
    bandwidth: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        h = float(self.bandwidth)
        if not math.isfinite(h) or h <= 0.0:
            raise InputError(f"bandwidth must be finite and > 0, got {self.bandwidth!r}")
        object.__setattr__(self, "bandwidth", h)


def as_points(points, d: int | None = None) -> np.ndarray:
    """Coerce ``points`` to a finite ``(n, d)`` float64 array.

    A 1-d input is read as a single point. Empty inputs are allowed and come
    back with shape ``(0, d)`` when ``d`` is known.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        if arr.size == 0:
            arr = arr.reshape(0, d if d is not None else 0)
        else:
            arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise InputError(f"points must be 1-d or 2-d, got shape {arr.shape}")
    if arr.shape[0] == 0 and d is not None and arr.shape[1] != d:
        arr = arr.reshape(0, d)
    if d is not None and arr.shape[1] != d:
        raise InputError(f"dimension mismatch: expected d={d}, got d={arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise InputError("points must have finite coordinates")
    return arr


def _apply(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if spec.family == "gaussian":
        d2 = cdist(a, b, "sqeuclidean")
        return np.exp(-d2 / (2.0 * spec.bandwidth**2))
    d1 = cdist(a, b, "cityblock")
    return np.exp(-d1 / spec.bandwidth)


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate ``K(x, y)`` for two single points."""
    xa = as_points(x)
    ya = as_points(y)
    if xa.shape != ya.shape or xa.shape[0] != 1:
        raise InputError(f"expected two points of equal dimension, got {xa.shape} and {ya.shape}")
    return float(_apply(spec, xa, ya)[0, 0])


def gram_block(spec: KernelSpec, a, b) -> np.ndarray:
    """Return the ``len(a) x len(b)`` matrix ``K(a_i, b_p)``.

    Empty inputs give an empty block. Differences are formed coordinate-wise, so
    ``gram_block(spec, a, a)`` is exactly symmetric with an exact unit diagonal.
    """
    a_arr = as_points(a)
    b_arr = as_points(b)
    if a_arr.shape[0] == 0 or b_arr.shape[0] == 0:
        return np.zeros((a_arr.shape[0], b_arr.shape[0]))
    if a_arr.shape[1] != b_arr.shape[1]:
        raise InputError(f"dimension mismatch: d={a_arr.shape[1]} vs d={b_arr.shape[1]}")
    if a_arr.shape[0] <= _ROW_CHUNK:
        return _apply(spec, a_arr, b_arr)
    out = np.empty((a_arr.shape[0], b_arr.shape[0]))
    for start in range(0, a_arr.shape[0], _ROW_CHUNK):
        stop = start + _ROW_CHUNK
        out[start:stop] = _apply(spec, a_arr[start:stop], b_arr)
    return out


def kernel_row_sums(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``sum_p K(a_i, b_p)`` for each row, without holding the full block for big ``a``."""
    if a.shape[0] == 0:
        return np.zeros(0)
    if b.shape[0] == 0:
        return np.zeros(a.shape[0])
    sums = np.empty(a.shape[0])
    for start in range(0, a.shape[0], _ROW_CHUNK):
        stop = start + _ROW_CHUNK
        sums[start:stop] = _apply(spec, a[start:stop], b).sum(axis=1)
    return sums


def kernel_bound(spec: KernelSpec) -> float:
    """Supremum of the kernel over all pairs; 1 for both supported families."""
    return 1.0


def median_heuristic_bandwidth(points) -> float:
    """Median pairwise Euclidean distance over distinct index pairs.

    Falls back to 1.0 when every point coincides (median distance 0).
    """
    arr = as_points(points)
    if arr.shape[0] < 2:
        raise InputError("median heuristic needs at least 2 points")
    med = float(np.median(pdist(arr, "euclidean")))
    return med if med > 0.0 else 1.0
