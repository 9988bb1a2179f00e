"""Weight sequences applied to the cross-product terms of the weighted estimator.

The shipped family is the alternating scheme ``k_{i,r}(gamma) = 1 + (-1)^i gamma``
for ``1 <= i <= r``. Its values depend only on ``i``, so the first ``q`` weights of
a length-``r`` sequence equal the full length-``q`` sequence.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from gmmd.errors import InputError

WEIGHT_FAMILIES = ("alternating",)

_TOL = 1e-12


@dataclass(frozen=True)
class WeightScheme:
    gamma: float = 0.5
    family: str = "alternating"

    def __post_init__(self) -> None:
        if self.family not in WEIGHT_FAMILIES:
            raise InputError(f"unknown weight family {self.family!r}")
        g = float(self.gamma)
        if not math.isfinite(g) or not 0.0 < g <= 1.0:
            raise InputError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)

    def deviations(self, r: int) -> np.ndarray:
        """``k_{i,r} - 1`` for ``i = 1..r``, computed without rounding (``+-gamma``)."""
        if r < 0:
            raise InputError(f"sequence length must be >= 0, got {r}")
        signs = np.where(np.arange(1, r + 1) % 2 == 0, 1.0, -1.0)
        return signs * self.gamma

    def weights(self, r: int) -> np.ndarray:
        """The full weight vector ``(k_{1,r}, ..., k_{r,r})``."""
        return 1.0 + self.deviations(r)


def weight(scheme: WeightScheme, i: int, r: int) -> float:
    """Single weight ``k_{i,r}(gamma)``.

    With ``gamma = 1`` odd indices get weight exactly 0, which is accepted.
    """
    if not 1 <= i <= r:
        raise InputError(f"weight index must satisfy 1 <= i <= r, got i={i}, r={r}")
    return 1.0 + (-1.0) ** i * scheme.gamma


def k_squared_limit(scheme: WeightScheme) -> float:
    """``lim (1/r) sum_i k_{i,r}^2``; equals ``1 + gamma^2`` for the alternating family."""
    return 1.0 + scheme.gamma**2


@dataclass(frozen=True)
class AssumptionReport:
    gamma: float
    r_max: int
    tau_observed: float
    c_k_observed: float
    k_sq_sequence_tail: float
    k_sq_limit: float
    pass_mean_bound: bool
    pass_uniform_bound: bool
    pass_k_sq_limit: bool

    @property
    def all_pass(self) -> bool:
        return self.pass_mean_bound and self.pass_uniform_bound and self.pass_k_sq_limit

    def to_dict(self) -> dict:
        out = asdict(self)
        out["all_pass"] = self.all_pass
        return out


def validate_assumptions(scheme: WeightScheme, r_max: int) -> AssumptionReport:
    """Check the three weight conditions empirically for every ``r <= r_max``.

    * mean bound: ``max_r r |mean(k_{.,r}) - 1| <= gamma``
    * uniform bound: ``max k < 2``
    * second moment: ``|(1/r_max) sum k^2 - k^2(gamma)| <= 2 gamma^2 / r_max``

    Relies on the weights depending only on ``i``, so one prefix pass covers
    every ``r``.
    """
    if r_max < 2:
        raise InputError(f"r_max must be >= 2, got {r_max}")
    dev = scheme.deviations(r_max)
    # r |mean - 1| == |sum_{i<=r} (k_i - 1)|; partial sums of +-gamma are exact
    partial = np.cumsum(dev)
    tau = float(np.max(np.abs(partial)))
    c_k = float(np.max(1.0 + dev))
    mean_sq = 1.0 + (2.0 * float(partial[-1]) + float(np.sum(dev * dev))) / r_max
    limit = k_squared_limit(scheme)
    g2 = scheme.gamma**2
    return AssumptionReport(
        gamma=scheme.gamma,
        r_max=int(r_max),
        tau_observed=tau,
        c_k_observed=c_k,
        k_sq_sequence_tail=mean_sq,
        k_sq_limit=limit,
        pass_mean_bound=tau <= scheme.gamma + _TOL,
        pass_uniform_bound=c_k < 2.0 + _TOL,
        pass_k_sq_limit=abs(mean_sq - limit) <= 2.0 * g2 / r_max + _TOL,
    )
