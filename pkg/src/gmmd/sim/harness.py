"""Seeded Monte Carlo studies of the weighted estimator and its test.

Replication ``r`` draws group ``j`` from the stream keyed by
``(seed, r, group j)``, so every replication can be recomputed in isolation
and the thread count never changes a report. Records are kept in replication
order and every aggregate is a function of the records (plus the scenario and
the reference quantities), which :meth:`SimulationReport.from_json` re-checks.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from gmmd.errors import InputError
from gmmd.estimators import GroupedSample, block_sums, weighted_from_sums
from gmmd.inference import decide
from gmmd.kernels import kernel_row_sums
from gmmd.sim.diagnostics import ks_distance
from gmmd.sim.oracles import gaussian_ensemble, gaussian_nu_sq, population_gmmd
from gmmd.sim.scenario import ScenarioSpec
from gmmd.streams import PURPOSE_SIDE, PURPOSE_THEORY, Stream
from gmmd.variance import TheoreticalVariance, sigma_hat_from_sums, sigma_from_nu, theoretical_sigma_sq

SCHEMA_VERSION = 1
_RECHECK_TOL = 1e-12


def generate_grouped_sample(scn: ScenarioSpec, rep_index: int) -> GroupedSample:
    """Replication ``rep_index`` of the scenario, group sizes from :func:`allocate_sizes`."""
    if rep_index < 0:
        raise InputError("rep_index must be >= 0")
    groups = [
        gen.sample(size, Stream(scn.seed, rep_index, j))
        for j, (gen, size) in enumerate(zip(scn.generators, scn.sizes))
    ]
    return GroupedSample(groups)


def _replicate(scn: ScenarioSpec, rep: int) -> dict:
    sample = generate_grouped_sample(scn, rep)
    sums = block_sums(sample, scn.kernel)
    stat = weighted_from_sums(sums, scn.scheme)
    var = sigma_hat_from_sums(sums, scn.scheme, "theorem")
    sigma_hat, z, p, reject = decide(stat, var.sigma_sq, sample.n, scn.alpha)
    return {"rep": rep, "statistic": stat, "sigma_hat": sigma_hat, "z": z, "p_value": p, "reject": bool(reject)}


def _map_reps(fn: Callable[[int], dict], count: int, threads: int) -> list[dict]:
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(fn, range(count)))
    else:
        records = [fn(r) for r in range(count)]
    return sorted(records, key=lambda rec: rec["rep"])


def _moments(values: np.ndarray) -> tuple[float, float]:
    # population variance (ddof=0) so a single replication gives 0, not NaN
    return float(np.mean(values)), float(np.var(values))


def compute_aggregates(kind: str, records: Sequence[dict], n: int, reference: dict) -> dict:
    z = np.array([r["z"] for r in records], dtype=np.float64)
    stat = np.array([r["statistic"] for r in records], dtype=np.float64)
    sig = np.array([r["sigma_hat"] for r in records], dtype=np.float64)
    rej = np.array([r["reject"] for r in records], dtype=bool)
    mean_z, var_z = _moments(z)
    mean_t, var_t = _moments(math.sqrt(n) * stat)
    sig_sq_mean = float(np.mean(sig * sig))
    agg = {
        "replications": len(records),
        "mean_z": mean_z,
        "var_z": var_z,
        "ks_z": ks_distance(z),
        "rejection_rate": float(np.mean(rej)),
        "mean_sqrt_n_statistic": mean_t,
        "var_sqrt_n_statistic": var_t,
        "mean_sigma_hat_sq_theorem": sig_sq_mean,
        "mean_sigma_hat_sq_printed": 4.0 * sig_sq_mean,
    }
    if kind == "alternative":
        std = np.array([r["standardized"] for r in records], dtype=np.float64)
        mean_s, var_s = _moments(std)
        centered = math.sqrt(n) * (stat - reference["population_T"])
        agg.update(
            mean_standardized=mean_s,
            var_standardized=var_s,
            ks_standardized=ks_distance(std),
            var_sqrt_n_centered=float(np.var(centered)),
            power=agg["rejection_rate"],
        )
    return agg


@dataclass
class SimulationReport:
    kind: str
    scenario: dict
    reference: dict
    records: list[dict]
    aggregates: dict
    wall_time_s: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        # wall time is left out so that reruns are byte-identical
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "seed": self.scenario["seed"],
            "scenario": self.scenario,
            "reference": self.reference,
            "aggregates": self.aggregates,
            "records": self.records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def records_csv(self) -> str:
        buf = io.StringIO()
        fields = list(self.records[0].keys())
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for rec in self.records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "SimulationReport":
        """Load a report and verify that its aggregates match its records."""
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise InputError(f"unsupported schema_version {data.get('schema_version')!r}")
        report = cls(
            kind=data["kind"],
            scenario=data["scenario"],
            reference=data["reference"],
            records=data["records"],
            aggregates=data["aggregates"],
        )
        fresh = compute_aggregates(report.kind, report.records, report.scenario["n"], report.reference)
        for key, value in fresh.items():
            stored = report.aggregates.get(key)
            if stored is None or abs(stored - value) > _RECHECK_TOL * max(1.0, abs(value)):
                raise InputError(f"aggregate {key!r} does not match records: stored {stored!r}, recomputed {value!r}")
        return report


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def null_reference(scn: ScenarioSpec) -> dict:
    """Side computation of ``nu^2`` and both null-variance formulas from ``side_draws`` fresh draws.

    Gaussian groups use the exact embedding; other distributions use the
    empirical embedding of a held-out sample of ``min(side_draws, 4000)`` points.
    """
    gen = scn.generators[0]
    draws = gen.sample(scn.side_draws, Stream(scn.seed, 0, 0, PURPOSE_SIDE))
    ref: dict = {"side_draws": scn.side_draws}
    if gen.kind == "normal" and scn.kernel.family == "gaussian":
        inner = gaussian_ensemble([gen, gen], [0.5, 0.5], scn.kernel.bandwidth).mean_inner(draws)[:, 0]
        ref["nu_sq_exact"] = gaussian_nu_sq(gen, scn.kernel.bandwidth)
    else:
        held = gen.sample(min(scn.side_draws, 4000), Stream(scn.seed, 1, 0, PURPOSE_SIDE))
        inner = kernel_row_sums(scn.kernel, draws, held) / held.shape[0]
    nu_sq = float(np.var(inner))
    ref["nu_sq"] = nu_sq
    ref["sigma_sq_theorem"] = sigma_from_nu(nu_sq, scn.rho, scn.scheme, "theorem")
    ref["sigma_sq_printed"] = sigma_from_nu(nu_sq, scn.rho, scn.scheme, "printed")
    return ref


def run_null_calibration(scn: ScenarioSpec, threads: int = 1, reference: dict | None = None) -> SimulationReport:
    """Replicate the test under equal distributions and summarize its null behaviour."""
    if not scn.is_null:
        raise InputError("null calibration needs identical generators in every group")
    start = time.perf_counter()
    ref = null_reference(scn) if reference is None else reference
    records = _map_reps(lambda r: _replicate(scn, r), scn.replications, threads)
    agg = compute_aggregates("null", records, scn.n, ref)
    return SimulationReport("null", scn.to_dict(), ref, records, agg, time.perf_counter() - start)


def theoretical_reference(scn: ScenarioSpec) -> tuple[float, TheoreticalVariance]:
    """Closed-form population value and Monte Carlo asymptotic variance for Gaussian scenarios."""
    if scn.kernel.family != "gaussian":
        raise InputError("closed-form references need the gaussian kernel")
    h = scn.kernel.bandwidth
    population_T = population_gmmd(scn.generators, scn.rho, h)
    ens = gaussian_ensemble(scn.generators, scn.rho, h)
    samplers = [
        (lambda size, seed, gen=gen: gen.sample(size, Stream(seed, 0, 0, PURPOSE_THEORY)))
        for gen in scn.generators
    ]
    theory = theoretical_sigma_sq(samplers, ens, scn.scheme, scn.mc_draws, scn.seed)
    return population_T, theory


def run_alternative_study(
    scn: ScenarioSpec,
    population_T: float,
    sigma_theory: float,
    threads: int = 1,
    reference_extra: dict | None = None,
) -> SimulationReport:
    """Replicate under a fixed alternative.

    ``sigma_theory`` is the asymptotic standard deviation of ``sqrt(n) T``;
    each record carries ``sqrt(n) (T - population_T) / sigma_theory``.
    """
    if not sigma_theory > 0.0:
        raise InputError(f"sigma_theory must be > 0, got {sigma_theory!r}")
    start = time.perf_counter()
    root_n = math.sqrt(scn.n)

    def one(rep: int) -> dict:
        rec = _replicate(scn, rep)
        rec["standardized"] = root_n * (rec["statistic"] - population_T) / sigma_theory
        return rec

    records = _map_reps(one, scn.replications, threads)
    ref = {"population_T": float(population_T), "sigma_theory": float(sigma_theory), **(reference_extra or {})}
    agg = compute_aggregates("alternative", records, scn.n, ref)
    return SimulationReport("alternative", scn.to_dict(), ref, records, agg, time.perf_counter() - start)


def run_power_curve(base: ScenarioSpec, shift_grid: Sequence[float], threads: int = 1) -> list[tuple[float, float]]:
    """Rejection rate when the second group's mean is moved to each grid value.

    Every grid point reuses the base seed, so shifts are compared on common
    random numbers and a shift of 0 reproduces the null rejection rate.
    """
    if len(shift_grid) == 0:
        raise InputError("shift grid must be nonempty")
    if not base.is_null:
        raise InputError("power curves start from identical generators")
    curve = []
    for shift in shift_grid:
        scn = base.with_group_mean(1, shift)
        records = _map_reps(lambda r, scn=scn: _replicate(scn, r), scn.replications, threads)
        curve.append((float(shift), float(np.mean([rec["reject"] for rec in records]))))
    return curve
