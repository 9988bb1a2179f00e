"""Closed-form kernel expectations for Gaussian distributions under the Gaussian kernel.

For independent ``X ~ N(mu1, s1^2)`` and ``Y ~ N(mu2, s2^2)`` and
``K(x, y) = exp(-(x - y)^2 / (2 h^2))``,

    E K(X, Y) = h / sqrt(v) * exp(-(mu1 - mu2)^2 / (2 v)),   v = h^2 + s1^2 + s2^2.

Multivariate product distributions multiply coordinate-wise. A zero standard
deviation gives a point mass, which is how ``<K(x, .), m>`` is evaluated.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from gmmd.errors import InputError, UnsupportedOracleError
from gmmd.estimators import check_proportions
from gmmd.sim.scenario import GeneratorSpec
from gmmd.variance import EmbeddingEnsemble


def gaussian_kernel_cross_expectation(mu1, s1, mu2, s2, h: float):
    """``E K(X, Y)`` for 1-d Gaussians; broadcasts over array arguments."""
    if h <= 0:
        raise InputError("bandwidth must be > 0")
    v = h * h + np.square(s1) + np.square(s2)
    out = h / np.sqrt(v) * np.exp(-np.square(np.subtract(mu1, mu2)) / (2.0 * v))
    return float(out) if np.ndim(out) == 0 else out


def _require_normal(dists: Sequence[GeneratorSpec]) -> None:
    for j, g in enumerate(dists, start=1):
        if g.kind != "normal":
            raise UnsupportedOracleError(f"group {j}: no closed form for {g.kind!r} distributions")
    if len({g.d for g in dists}) != 1:
        raise InputError("all distributions must share one dimension")


def product_cross_expectation(p: GeneratorSpec, q: GeneratorSpec, h: float) -> float:
    _require_normal([p, q])
    vals = gaussian_kernel_cross_expectation(np.asarray(p.a), np.asarray(p.b), np.asarray(q.a), np.asarray(q.b), h)
    return float(np.prod(vals))


def mean_embedding_gram(dists: Sequence[GeneratorSpec], h: float) -> np.ndarray:
    """``<m_j, m_l>`` for every pair of groups."""
    _require_normal(dists)
    s = len(dists)
    gram = np.empty((s, s))
    for j in range(s):
        for l in range(j, s):
            gram[j, l] = gram[l, j] = product_cross_expectation(dists[j], dists[l], h)
    return gram


def population_gmmd(dists: Sequence[GeneratorSpec], rho: Sequence[float], h: float) -> float:
    """Population ``sum_j sum_{l != j} rho_l ||m_j - m_l||^2`` with Gaussian kernel bandwidth ``h``."""
    rho_arr = check_proportions(rho)
    if rho_arr.size != len(dists):
        raise InputError("rho must have one entry per distribution")
    gram = mean_embedding_gram(dists, h)
    total = 0.0
    for j in range(len(dists)):
        for l in range(len(dists)):
            if l != j:
                mmd_sq = gram[j, j] + gram[l, l] - 2.0 * gram[j, l]
                total += rho_arr[l] * mmd_sq
    return max(total, 0.0)


def gaussian_ensemble(dists: Sequence[GeneratorSpec], rho: Sequence[float], h: float) -> EmbeddingEnsemble:
    """Exact embedding ensemble for Gaussian groups under the Gaussian kernel."""
    gram = mean_embedding_gram(dists, h)
    means = np.array([g.a for g in dists])
    sdevs = np.array([g.b for g in dists])

    def mean_inner(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        # (m, 1, d) against (1, s, d), product over coordinates
        vals = gaussian_kernel_cross_expectation(x[:, None, :], 0.0, means[None], sdevs[None], h)
        return np.prod(vals, axis=2)

    return EmbeddingEnsemble(rho=np.asarray(rho, dtype=np.float64), gram_means=gram, mean_inner=mean_inner)


def gaussian_nu_sq(dist: GeneratorSpec, h: float) -> float:
    """Exact ``Var <K(X, .), m>`` for ``X`` drawn from ``dist`` and ``m`` its own embedding."""
    _require_normal([dist])
    sd2 = np.square(np.asarray(dist.b))
    v = h * h + sd2
    first = np.prod((h * h / v) * np.sqrt(v / (v + 2.0 * sd2)))
    second = np.prod((h / np.sqrt(v)) * np.sqrt(v / (v + sd2))) ** 2
    return float(first - second)
