"""Asymptotic-normal homogeneity test built on the weighted estimator.

The test is one-sided: under any fixed alternative the population discrepancy
is positive, so only large standardized values count against equality.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from gmmd.errors import DegenerateVarianceError, InputError
from gmmd.estimators import GroupedSample, block_sums, weighted_from_sums
from gmmd.kernels import KernelSpec
from gmmd.variance import sigma_hat_from_sums
from gmmd.weights import WeightScheme

_SQRT2 = math.sqrt(2.0)


def normal_cdf(z: float) -> float:
    """Standard normal CDF, ``0.5 * erfc(-z / sqrt(2))``."""
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_sf(z: float) -> float:
    """Upper tail ``1 - Phi(z)`` without cancellation for large ``z``."""
    return 0.5 * math.erfc(z / _SQRT2)


@dataclass(frozen=True)
class TestResult:
    statistic_raw: float
    sigma_hat: float
    z_score: float
    p_value: float
    reject: bool
    alpha: float
    n: int
    gamma: float
    variance_variant: str = "theorem"

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)


def decide(statistic: float, sigma_sq: float, n: int, alpha: float) -> tuple[float, float, float, bool]:
    """Standardize and decide: returns ``(sigma_hat, z, p, reject)``."""
    if not sigma_sq > 0.0:
        raise DegenerateVarianceError(
            "estimated null variance is zero (all kernel embeddings constant); the statistic cannot be standardized"
        )
    sigma_hat = math.sqrt(sigma_sq)
    z = math.sqrt(n) * statistic / sigma_hat
    p = normal_sf(z)
    return sigma_hat, z, p, p <= alpha


def homogeneity_test(
    sample: GroupedSample,
    spec: KernelSpec,
    scheme: WeightScheme,
    alpha: float = 0.05,
    variant: str = "theorem",
    threads: int = 1,
) -> TestResult:
    """Test equality of all group distributions.

    Computes the weighted estimate, the plug-in null variance, the standardized
    ``z = sqrt(n) T / sigma_hat`` and the upper-tail p-value.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    small = [j for j, nj in enumerate(sample.sizes, start=1) if nj < 2]
    if small:
        raise InputError(f"every group needs at least 2 points; too small: groups {small}")
    sums = block_sums(sample, spec, threads)
    stat = weighted_from_sums(sums, scheme)
    var = sigma_hat_from_sums(sums, scheme, variant)
    sigma_hat, z, p, reject = decide(stat, var.sigma_sq, sample.n, alpha)
    return TestResult(
        statistic_raw=stat,
        sigma_hat=sigma_hat,
        z_score=z,
        p_value=p,
        reject=reject,
        alpha=alpha,
        n=sample.n,
        gamma=scheme.gamma,
        variance_variant=variant,
    )
