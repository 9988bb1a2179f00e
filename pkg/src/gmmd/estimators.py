"""Grouped samples and the naive / weighted GMMD^2 estimators.

All double sums follow the V-statistic convention: diagonal terms
``K(X_i, X_i)`` are included. The weighted estimator multiplies the ``i``-th
cross term of group ``j`` by ``k_{i, n_j}(gamma)``, where ``i`` is the stored
position of the point in its group, so it depends on the within-group order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gmmd.errors import InputError
from gmmd.kernels import KernelSpec, as_points, kernel_row_sums
from gmmd.weights import WeightScheme

_PROPORTION_TOL = 1e-12


@dataclass(frozen=True, init=False)
class GroupedSample:
    """``s >= 2`` groups of finite ``d``-dimensional points, stored as ``(n_j, d)`` arrays."""

    groups: tuple[np.ndarray, ...]

    def __init__(self, groups: Sequence) -> None:
        arrays = [as_points(g) for g in groups]
        if len(arrays) < 2:
            raise InputError(f"need at least 2 groups, got {len(arrays)}")
        for j, arr in enumerate(arrays, start=1):
            if arr.shape[0] == 0:
                raise InputError(f"group {j} is empty")
        d = arrays[0].shape[1]
        for j, arr in enumerate(arrays, start=1):
            if arr.shape[1] != d:
                raise InputError(f"group {j} has dimension {arr.shape[1]}, expected {d}")
        frozen = []
        for arr in arrays:
            arr = np.array(arr, copy=True)
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "groups", tuple(frozen))

    @property
    def s(self) -> int:
        return len(self.groups)

    @property
    def d(self) -> int:
        return self.groups[0].shape[1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def pooled(self) -> np.ndarray:
        return np.concatenate(self.groups, axis=0)

    def shuffled(self, seed: int) -> "GroupedSample":
        """Deterministically permute points within each group."""
        rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
        return GroupedSample([g[rng.permutation(g.shape[0])] for g in self.groups])


def proportions(sample: GroupedSample) -> np.ndarray:
    """Group fractions ``n_j / n``."""
    sizes = np.asarray(sample.sizes, dtype=np.float64)
    return sizes / sizes.sum()


def check_proportions(rho: Sequence[float]) -> np.ndarray:
    arr = np.asarray(rho, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise InputError("proportions must be a sequence of at least 2 values")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise InputError(f"each proportion must lie in (0, 1), got {arr.tolist()}")
    if abs(math.fsum(arr) - 1.0) > _PROPORTION_TOL:
        raise InputError(f"proportions must sum to 1, got {math.fsum(arr)!r}")
    return arr


def allocate_sizes(n: int, rho: Sequence[float]) -> tuple[int, ...]:
    """Split ``n`` as ``floor(n rho_j)`` for all but the last group, which takes the rest."""
    rho_arr = check_proportions(rho)
    if n < 1:
        raise InputError(f"total size must be positive, got {n}")
    sizes = [int(math.floor(n * r)) for r in rho_arr[:-1]]
    sizes.append(n - sum(sizes))
    for j, size in enumerate(sizes, start=1):
        if size < 1:
            raise InputError(f"group {j} would receive {size} points for n={n}")
    return tuple(sizes)


@dataclass(frozen=True)
class BlockSums:
    """Kernel sums shared by the estimators and the variance estimator.

    ``rows[j][l][i] = sum_p K(X_i^(j), X_p^(l))``, for every ordered pair of
    groups including ``j == l``.
    """

    sizes: tuple[int, ...]
    rows: tuple[tuple[np.ndarray, ...], ...]

    def self_sum(self, j: int) -> float:
        return float(self.rows[j][j].sum())


def _pair_sums(spec: KernelSpec, a: np.ndarray, b: np.ndarray, same: bool):
    row = kernel_row_sums(spec, a, b)
    if same:
        return row, row
    return row, kernel_row_sums(spec, b, a)


def block_sums(sample: GroupedSample, spec: KernelSpec, threads: int = 1) -> BlockSums:
    """Compute all per-block row sums, one unordered pair of groups at a time.

    Pairs are independent; with ``threads > 1`` they are evaluated concurrently
    but stored by pair index, so the result does not depend on the thread count.
    """
    s = sample.s
    pairs = [(j, l) for j in range(s) for l in range(j, s)]
    groups = sample.groups

    def work(pair):
        j, l = pair
        return _pair_sums(spec, groups[j], groups[l], j == l)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(p) for p in pairs]
    rows: list[list[np.ndarray | None]] = [[None] * s for _ in range(s)]
    for (j, l), (row_jl, row_lj) in zip(pairs, results):
        rows[j][l] = row_jl
        rows[l][j] = row_lj
    return BlockSums(sizes=sample.sizes, rows=tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class EstimateResult:
    statistic: float
    n: int
    gamma: float | None = None


def _combine(sums: BlockSums, cross_weights: Sequence[np.ndarray] | None) -> float:
    sizes = sums.sizes
    n = sum(sizes)
    s = len(sizes)
    norms = [sums.self_sum(j) / (sizes[j] * sizes[j]) for j in range(s)]
    total = 0.0
    for j in range(s):
        for l in range(s):
            if l == j:
                continue
            row = sums.rows[j][l]
            cross = float(row.sum()) if cross_weights is None else float(cross_weights[j] @ row)
            term = norms[j] + norms[l] - 2.0 * cross / (sizes[j] * sizes[l])
            total += (sizes[l] / n) * term
    return total


def naive_from_sums(sums: BlockSums) -> float:
    return max(_combine(sums, None), 0.0)


def weighted_from_sums(sums: BlockSums, scheme: WeightScheme) -> float:
    return _combine(sums, [scheme.weights(nj) for nj in sums.sizes])


def naive_gmmd(sample: GroupedSample, spec: KernelSpec, threads: int = 1) -> EstimateResult:
    """Plug-in estimate ``sum_j sum_{l != j} pi_l ||m_j - m_l||^2``, clamped at 0."""
    stat = naive_from_sums(block_sums(sample, spec, threads))
    return EstimateResult(statistic=stat, n=sample.n, gamma=None)


def weighted_gmmd(
    sample: GroupedSample, spec: KernelSpec, scheme: WeightScheme, threads: int = 1
) -> EstimateResult:
    """Weighted estimate with ``k_{i,n_j}(gamma)`` on each cross term.

    ``scheme`` only needs a ``weights(r)`` method returning a length-``r``
    array, so alternative weightings can be plugged in. The result can be
    negative and is returned unclamped.
    """
    stat = weighted_from_sums(block_sums(sample, spec, threads), scheme)
    return EstimateResult(statistic=stat, n=sample.n, gamma=getattr(scheme, "gamma", None))
