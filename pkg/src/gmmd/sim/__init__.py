"""Data generators, closed-form oracles and Monte Carlo studies."""

from gmmd.sim.diagnostics import ks_distance
from gmmd.sim.harness import (
    SimulationReport,
    generate_grouped_sample,
    null_reference,
    run_alternative_study,
    run_null_calibration,
    run_power_curve,
    theoretical_reference,
)
from gmmd.sim.oracles import (
    gaussian_ensemble,
    gaussian_kernel_cross_expectation,
    gaussian_nu_sq,
    population_gmmd,
)
from gmmd.sim.scenario import GeneratorSpec, ScenarioError, ScenarioSpec, parse_scenario

__all__ = [
    "GeneratorSpec",
    "ScenarioError",
    "ScenarioSpec",
    "SimulationReport",
    "gaussian_ensemble",
    "gaussian_kernel_cross_expectation",
    "gaussian_nu_sq",
    "generate_grouped_sample",
    "ks_distance",
    "null_reference",
    "parse_scenario",
    "population_gmmd",
    "run_alternative_study",
    "run_null_calibration",
    "run_power_curve",
    "theoretical_reference",
]
