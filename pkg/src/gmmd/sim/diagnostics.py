"""Distance between an empirical distribution and the standard normal."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from gmmd.errors import InputError


def ks_distance(values) -> float:
    """Kolmogorov-Smirnov sup-distance between the empirical CDF of ``values`` and N(0, 1).

    Evaluated at the sorted points from both sides:
    ``max_i max(i/m - Phi(x_(i)), Phi(x_(i)) - (i-1)/m)``.
    """
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if x.size == 0:
        raise InputError("ks_distance needs at least one value")
    if not np.all(np.isfinite(x)):
        raise InputError("ks_distance needs finite values")
    m = x.size
    cdf = ndtr(x)
    upper = np.arange(1, m + 1) / m - cdf
    lower = cdf - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))
