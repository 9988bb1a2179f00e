"""Generalized maximum mean discrepancy between several samples.

The weighted estimator is asymptotically normal both when all groups share
one distribution and under alternatives, which gives a simple z-test of
homogeneity.
"""

from gmmd.errors import DegenerateVarianceError, GMMDError, InputError, UnsupportedOracleError
from gmmd.estimators import (
    EstimateResult,
    GroupedSample,
    allocate_sizes,
    naive_gmmd,
    proportions,
    weighted_gmmd,
)
from gmmd.inference import TestResult, homogeneity_test, normal_cdf
from gmmd.kernels import KernelSpec, eval_kernel, gram_block, kernel_bound, median_heuristic_bandwidth
from gmmd.variance import (
    EmbeddingEnsemble,
    VarianceEstimate,
    empirical_ensemble,
    nu_hat_sq,
    pooled_embedding_inner,
    sigma_hat_sq,
    theoretical_sigma_sq,
    u_value,
    v_value,
)
from gmmd.weights import AssumptionReport, WeightScheme, k_squared_limit, validate_assumptions, weight

__version__ = "0.1.0"
