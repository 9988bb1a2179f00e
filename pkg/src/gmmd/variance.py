"""Null-variance estimation and the asymptotic variance of the weighted estimator.

Under equal distributions the asymptotic variance of ``sqrt(n) * T_{n,gamma}`` is

    sigma^2 = 4 (k^2(gamma) - 1) nu^2 sum_j rho_j^{-1} (1 - rho_j)^2,

with ``nu^2 = Var <K(X, .), m>``. The ``"printed"`` variant carries an extra
factor 4 inside the sum and is kept for comparison only; ``"theorem"`` is the
default.

Group indices in this module are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from gmmd.errors import InputError
from gmmd.estimators import BlockSums, GroupedSample, block_sums, check_proportions, proportions
from gmmd.kernels import KernelSpec, as_points, kernel_row_sums
from gmmd.streams import mix_seed
from gmmd.weights import WeightScheme, k_squared_limit

FormulaVariant = Literal["theorem", "printed"]
VARIANTS: tuple[str, ...] = ("theorem", "printed")


@dataclass(frozen=True)
class VarianceEstimate:
    sigma_sq: float
    nu_sq: float
    per_group_nu_sq: tuple[float, ...]
    formula_variant: str = "theorem"


def pooled_embedding_inner(sample: GroupedSample, spec: KernelSpec, x) -> float | np.ndarray:
    """``<K(x, .), m_hat>`` with ``m_hat = sum_j pi_j m_hat_j``.

    Returns a float for a single point and an array for an ``(m, d)`` batch.
    """
    single = np.ndim(x) == 1
    pts = as_points(x, sample.d)
    pi = proportions(sample)
    out = np.zeros(pts.shape[0])
    for p, g in zip(pi, sample.groups):
        out += p * kernel_row_sums(spec, pts, g) / g.shape[0]
    return float(out[0]) if single else out


def _inner_with_pooled_mean(sums: BlockSums) -> list[np.ndarray]:
    sizes = sums.sizes
    n = sum(sizes)
    values = []
    for j in range(len(sizes)):
        f = np.zeros(sizes[j])
        for l in range(len(sizes)):
            # pi_l / n_l == 1 / n
            f += sums.rows[j][l] / n
        values.append(f)
    return values


def nu_hat_from_sums(sums: BlockSums) -> tuple[np.ndarray, float]:
    sizes = sums.sizes
    n = sum(sizes)
    per_group = []
    for f in _inner_with_pooled_mean(sums):
        # two-pass form of mean(f^2) - mean(f)^2
        per_group.append(max(float(np.var(f)), 0.0))
    per_group_arr = np.asarray(per_group)
    pooled = float(sum((nj / n) * v for nj, v in zip(sizes, per_group)))
    return per_group_arr, pooled


def nu_hat_sq(sample: GroupedSample, spec: KernelSpec, threads: int = 1) -> tuple[np.ndarray, float]:
    """Within-group empirical variances of ``<K(X_i^(j), .), m_hat>`` and their ``pi``-weighted sum."""
    return nu_hat_from_sums(block_sums(sample, spec, threads))


def null_variance_factor(pi: Sequence[float], variant: str = "theorem") -> float:
    """``sum_j c pi_j^{-1} (1 - pi_j)^2`` with ``c = 1`` (theorem) or ``c = 4`` (printed)."""
    if variant not in VARIANTS:
        raise InputError(f"unknown variance variant {variant!r}; expected one of {VARIANTS}")
    arr = np.asarray(pi, dtype=np.float64)
    factor = float(np.sum((1.0 - arr) ** 2 / arr))
    return 4.0 * factor if variant == "printed" else factor


def sigma_from_nu(nu_sq: float, pi: Sequence[float], scheme: WeightScheme, variant: str = "theorem") -> float:
    return 4.0 * (k_squared_limit(scheme) - 1.0) * nu_sq * null_variance_factor(pi, variant)


def sigma_hat_from_sums(sums: BlockSums, scheme: WeightScheme, variant: str = "theorem") -> VarianceEstimate:
    per_group, pooled = nu_hat_from_sums(sums)
    sizes = np.asarray(sums.sizes, dtype=np.float64)
    pi = sizes / sizes.sum()
    return VarianceEstimate(
        sigma_sq=sigma_from_nu(pooled, pi, scheme, variant),
        nu_sq=pooled,
        per_group_nu_sq=tuple(float(v) for v in per_group),
        formula_variant=variant,
    )


def sigma_hat_sq(
    sample: GroupedSample,
    spec: KernelSpec,
    scheme: WeightScheme,
    variant: str = "theorem",
    threads: int = 1,
) -> VarianceEstimate:
    """Plug-in estimate of the null asymptotic variance of ``sqrt(n) T_{n,gamma}``."""
    return sigma_hat_from_sums(block_sums(sample, spec, threads), scheme, variant)


@dataclass(frozen=True)
class EmbeddingEnsemble:
    """Population kernel mean embeddings ``m_1..m_s`` seen through inner products.

    ``mean_inner(x)`` maps an ``(m, d)`` array to the ``(m, s)`` array of
    ``<K(x_i, .), m_j>``; ``gram_means[j, l] = <m_j, m_l>``.
    """

    rho: np.ndarray
    gram_means: np.ndarray
    mean_inner: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self) -> None:
        rho = check_proportions(self.rho)
        gram = np.asarray(self.gram_means, dtype=np.float64)
        if gram.shape != (rho.size, rho.size):
            raise InputError(f"gram_means must be {rho.size}x{rho.size}, got {gram.shape}")
        if not np.allclose(gram, gram.T, rtol=0.0, atol=1e-12):
            raise InputError("gram_means must be symmetric")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "gram_means", gram)

    @property
    def s(self) -> int:
        return self.rho.size

    def pooled_inner(self, x) -> np.ndarray:
        """``<K(x, .), m>`` with ``m = sum_j rho_j m_j``."""
        return self.mean_inner(as_points(x)) @ self.rho

    def total_inner(self, x) -> np.ndarray:
        """``<K(x, .), mu>`` with ``mu = sum_j m_j``."""
        return self.mean_inner(as_points(x)).sum(axis=1)


def empirical_ensemble(reference: GroupedSample, spec: KernelSpec, rho: Sequence[float] | None = None) -> EmbeddingEnsemble:
    """Ensemble whose embeddings are the empirical means of a large held-out sample."""
    rho_arr = proportions(reference) if rho is None else np.asarray(rho, dtype=np.float64)
    if rho_arr.size != reference.s:
        raise InputError("rho must have one entry per group")
    sums = block_sums(reference, spec)
    sizes = reference.sizes
    gram = np.array([[sums.rows[j][l].sum() / (sizes[j] * sizes[l]) for l in range(reference.s)]
                     for j in range(reference.s)])
    gram = 0.5 * (gram + gram.T)
    groups = reference.groups

    def mean_inner(x: np.ndarray) -> np.ndarray:
        pts = as_points(x, reference.d)
        return np.column_stack([kernel_row_sums(spec, pts, g) / g.shape[0] for g in groups])

    return EmbeddingEnsemble(rho=rho_arr, gram_means=gram, mean_inner=mean_inner)


def _check_group(ens: EmbeddingEnsemble, j: int) -> None:
    if not 0 <= j < ens.s:
        raise InputError(f"group index must be in [0, {ens.s}), got {j}")


def u_coefficients(ens: EmbeddingEnsemble, j: int) -> np.ndarray:
    """``c`` such that ``U_j(x) = sum_l c_l (<K(x,.), m_l> - <m_j, m_l>)``."""
    _check_group(ens, j)
    s, rho_j = ens.s, ens.rho[j]
    c = np.full(s, -rho_j)
    c[j] += (1.0 - 2.0 * rho_j + s * rho_j) + rho_j
    return c


def v_coefficients(ens: EmbeddingEnsemble, j: int) -> np.ndarray:
    _check_group(ens, j)
    c = ens.rho.copy()
    c[j] -= ens.rho[j]
    return c


def _functional(ens: EmbeddingEnsemble, j: int, x, coef: np.ndarray):
    single = np.ndim(x) == 1
    inner = ens.mean_inner(as_points(x))
    values = inner @ coef - ens.gram_means[j] @ coef
    return float(values[0]) if single else values


def u_value(ens: EmbeddingEnsemble, j: int, x):
    """``<K(x,.) - m_j, (1 - 2 rho_j + s rho_j) m_j + rho_j (m_j - mu)>``."""
    return _functional(ens, j, x, u_coefficients(ens, j))


def v_value(ens: EmbeddingEnsemble, j: int, x):
    """``<K(x,.) - m_j, m - rho_j m_j>``."""
    return _functional(ens, j, x, v_coefficients(ens, j))


@dataclass(frozen=True)
class TheoreticalVariance:
    """Monte Carlo evaluation of the asymptotic variance and its pieces, per group."""

    sigma_sq: float
    per_group_sigma_sq: tuple[float, ...]
    var_u: tuple[float, ...]
    var_v: tuple[float, ...]
    cov_uv: tuple[float, ...]
    std_error: float
    mc_draws: int


Sampler = Callable[[int, int], np.ndarray]


def _combine_moments(u: np.ndarray, v: np.ndarray, k_sq: float) -> tuple[float, float, float, float]:
    cov = np.cov(u, v)
    var_u, var_v, cov_uv = float(cov[0, 0]), float(cov[1, 1]), float(cov[0, 1])
    return var_u + k_sq * var_v - 2.0 * cov_uv, var_u, var_v, cov_uv


def theoretical_sigma_sq(
    samplers: Sequence[Sampler],
    ens: EmbeddingEnsemble,
    scheme: WeightScheme,
    mc_draws: int,
    seed: int,
    batches: int = 10,
) -> TheoreticalVariance:
    """Monte Carlo value of ``sum_j 4 rho_j^{-1} sigma_j^2(gamma)``.

    ``samplers[j](size, seed)`` must return ``size`` draws from group ``j`` as
    an ``(size, d)`` array; group ``j`` is driven by ``mix_seed(seed, j)``.
    ``U_j`` and ``V_j`` are evaluated on the same draws, and
    ``sigma_j^2 = Var U_j + k^2(gamma) Var V_j - 2 Cov(U_j, V_j)``.
    The standard error comes from recomputing the total on ``batches``
    disjoint slices of the draws.
    """
    if mc_draws <= 0:
        raise InputError(f"mc_draws must be positive, got {mc_draws}")
    if len(samplers) != ens.s:
        raise InputError(f"need {ens.s} samplers, got {len(samplers)}")
    k_sq = k_squared_limit(scheme)
    per_group, var_u, var_v, cov_uv = [], [], [], []
    batch_totals = np.zeros(batches)
    batch_edges = np.linspace(0, mc_draws, batches + 1).astype(int)
    for j, sampler in enumerate(samplers):
        x = as_points(sampler(mc_draws, mix_seed(seed, j)))
        u = u_value(ens, j, x)
        v = v_value(ens, j, x)
        sj, vu, vv, cuv = _combine_moments(u, v, k_sq)
        per_group.append(sj)
        var_u.append(vu)
        var_v.append(vv)
        cov_uv.append(cuv)
        for b in range(batches):
            lo, hi = batch_edges[b], batch_edges[b + 1]
            if hi - lo >= 2:
                batch_totals[b] += 4.0 / ens.rho[j] * _combine_moments(u[lo:hi], v[lo:hi], k_sq)[0]
    sigma = float(sum(4.0 / r * sj for r, sj in zip(ens.rho, per_group)))
    se = float(np.std(batch_totals, ddof=1) / np.sqrt(batches)) if batches > 1 else float("nan")
    return TheoreticalVariance(
        sigma_sq=sigma,
        per_group_sigma_sq=tuple(per_group),
        var_u=tuple(var_u),
        var_v=tuple(var_v),
        cov_uv=tuple(cov_uv),
        std_error=se,
        mc_draws=int(mc_draws),
    )
