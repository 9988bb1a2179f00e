"""Generator and scenario descriptions, and the scenario text format.

A scenario file is INI-style (``configparser``): one ``[scenario]`` section of
keys and one ``[group N]`` section per group, numbered ``1..s``::

    [scenario]
    study = null              ; null | alternative | power
    n = 1500
    rho = 0.3, 0.3, 0.4
    gamma = 0.5
    alpha = 0.05
    replications = 1000
    seed = 12345
    kernel = gaussian
    bandwidth = 1.0
    dimension = 1             ; optional, broadcasts scalar group parameters
    mc_draws = 100000         ; alternative: draws for the theoretical variance
    side_draws = 100000       ; null: draws for the reference variance
    shift_grid = 0, 0.5, 1.0  ; power: group-2 mean values

    [group 1]
    distribution = normal     ; normal (mean, sdev) | uniform (lo, hi)
    mean = 0
    sdev = 1

Vector parameters are comma-separated, one value per coordinate.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from gmmd.errors import InputError
from gmmd.estimators import allocate_sizes, check_proportions
from gmmd.kernels import KernelSpec
from gmmd.streams import MASK64, Stream
from gmmd.weights import WeightScheme

STUDIES = ("null", "alternative", "power")


class ScenarioError(InputError):
    """Scenario validation failure carrying one message per offending field."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class GeneratorSpec:
    """Product distribution with iid-shaped coordinates.

    ``normal``: ``a`` = means, ``b`` = standard deviations (> 0).
    ``uniform``: ``a`` = lower bounds, ``b`` = upper bounds (``a < b``).
    """

    kind: str
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self) -> None:
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.kind not in ("normal", "uniform"):
            raise InputError(f"unknown distribution {self.kind!r}")
        if not a or len(a) != len(b):
            raise InputError("distribution parameters must be nonempty and of equal length")
        if not all(math.isfinite(v) for v in a + b):
            raise InputError("distribution parameters must be finite")
        if self.kind == "normal" and any(v <= 0.0 for v in b):
            raise InputError("normal sdev must be > 0")
        if self.kind == "uniform" and any(lo >= hi for lo, hi in zip(a, b)):
            raise InputError("uniform bounds need lo < hi")

    @classmethod
    def normal(cls, mean, sdev=1.0, d: int | None = None) -> "GeneratorSpec":
        return cls("normal", *_broadcast(mean, sdev, d))

    @classmethod
    def uniform(cls, lo, hi, d: int | None = None) -> "GeneratorSpec":
        return cls("uniform", *_broadcast(lo, hi, d))

    @property
    def d(self) -> int:
        return len(self.a)

    def sample(self, size: int, stream: Stream) -> np.ndarray:
        """Draw ``size`` points, consuming ``size * d`` outputs in row-major order."""
        a = np.asarray(self.a)
        b = np.asarray(self.b)
        if self.kind == "normal":
            z = stream.normal(size * self.d).reshape(size, self.d)
            return a + b * z
        u = stream.uniform(size * self.d).reshape(size, self.d)
        return a + (b - a) * u

    def to_dict(self) -> dict:
        if self.kind == "normal":
            return {"distribution": "normal", "mean": list(self.a), "sdev": list(self.b)}
        return {"distribution": "uniform", "lo": list(self.a), "hi": list(self.b)}


def _broadcast(a, b, d: int | None) -> tuple[tuple[float, ...], tuple[float, ...]]:
    av = np.atleast_1d(np.asarray(a, dtype=np.float64))
    bv = np.atleast_1d(np.asarray(b, dtype=np.float64))
    size = d if d is not None else max(av.size, bv.size)
    if av.size == 1:
        av = np.full(size, av[0])
    if bv.size == 1:
        bv = np.full(size, bv[0])
    if av.size != size or bv.size != size:
        raise InputError(f"parameter vectors must have length {size}")
    return tuple(av.tolist()), tuple(bv.tolist())


@dataclass(frozen=True)
class ScenarioSpec:
    generators: tuple[GeneratorSpec, ...]
    rho: tuple[float, ...]
    n: int
    gamma: float = 0.5
    kernel: KernelSpec = field(default_factory=KernelSpec)
    replications: int = 1000
    seed: int = 0
    alpha: float = 0.05
    study: str = "null"
    mc_draws: int = 100_000
    side_draws: int = 100_000
    shift_grid: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        object.__setattr__(self, "shift_grid", tuple(float(v) for v in self.shift_grid))
        errors = []
        if len(self.generators) < 2:
            errors.append("need at least 2 groups")
        elif len({g.d for g in self.generators}) != 1:
            errors.append("all groups must share one dimension")
        if len(self.rho) != len(self.generators):
            errors.append(f"rho has {len(self.rho)} entries for {len(self.generators)} groups")
        else:
            try:
                check_proportions(self.rho)
                allocate_sizes(self.n, self.rho)
            except InputError as exc:
                errors.append(str(exc))
        try:
            WeightScheme(self.gamma)
        except InputError as exc:
            errors.append(str(exc))
        if self.replications < 1:
            errors.append("replications must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            errors.append("alpha must lie in (0, 1)")
        if not 0 <= self.seed <= MASK64:
            errors.append("seed must be an unsigned 64-bit integer")
        if self.study not in STUDIES:
            errors.append(f"study must be one of {STUDIES}")
        if self.mc_draws < 1000:
            errors.append("mc_draws must be >= 1000")
        if self.side_draws < 2:
            errors.append("side_draws must be >= 2")
        if errors:
            raise ScenarioError(errors)

    @property
    def s(self) -> int:
        return len(self.generators)

    @property
    def d(self) -> int:
        return self.generators[0].d

    @property
    def sizes(self) -> tuple[int, ...]:
        return allocate_sizes(self.n, self.rho)

    @property
    def scheme(self) -> WeightScheme:
        return WeightScheme(self.gamma)

    @property
    def is_null(self) -> bool:
        return all(g == self.generators[0] for g in self.generators)

    def with_group_mean(self, group: int, value: float) -> "ScenarioSpec":
        """Copy with every mean coordinate of ``group`` (0-based) set to ``value``."""
        gen = self.generators[group]
        if gen.kind != "normal":
            raise InputError("mean shifts need a normal generator")
        gens = list(self.generators)
        gens[group] = GeneratorSpec("normal", (float(value),) * gen.d, gen.b)
        return replace(self, generators=tuple(gens))

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "n": self.n,
            "sizes": list(self.sizes),
            "rho": list(self.rho),
            "gamma": self.gamma,
            "alpha": self.alpha,
            "replications": self.replications,
            "seed": self.seed,
            "kernel": {"family": self.kernel.family, "bandwidth": self.kernel.bandwidth},
            "mc_draws": self.mc_draws,
            "side_draws": self.side_draws,
            "shift_grid": list(self.shift_grid),
            "groups": [g.to_dict() for g in self.generators],
        }


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario file; all field errors are reported together."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError([f"syntax: {exc}"]) from exc
    if not parser.has_section("scenario"):
        raise ScenarioError(["missing [scenario] section"])
    sec = parser["scenario"]
    errors: list[str] = []

    def get(key, conv, default=None, required=False):
        if key not in sec:
            if required:
                errors.append(f"scenario.{key}: required")
            return default
        try:
            return conv(sec[key])
        except (ValueError, InputError) as exc:
            errors.append(f"scenario.{key}: {exc}")
            return default

    n = get("n", int, required=True)
    rho = get("rho", _floats, required=True)
    dim = get("dimension", int)
    kernel = None
    family = get("kernel", str.strip, "gaussian")
    bandwidth = get("bandwidth", float, 1.0)
    try:
        kernel = KernelSpec(family, bandwidth)
    except InputError as exc:
        errors.append(f"scenario.kernel: {exc}")
    opts = dict(
        gamma=get("gamma", float, 0.5),
        alpha=get("alpha", float, 0.05),
        replications=get("replications", int, 1000),
        seed=get("seed", int, 0),
        study=get("study", str.strip, "null"),
        mc_draws=get("mc_draws", int, 100_000),
        side_draws=get("side_draws", int, 100_000),
        shift_grid=tuple(get("shift_grid", _floats, [])),
    )
    known = {"n", "rho", "dimension", "kernel", "bandwidth", *opts}
    for key in sec:
        if key not in known:
            errors.append(f"scenario.{key}: unknown key")

    group_sections = [name for name in parser.sections() if name != "scenario"]
    generators: dict[int, GeneratorSpec] = {}
    for name in group_sections:
        parts = name.split()
        if len(parts) != 2 or parts[0] != "group" or not parts[1].isdigit():
            errors.append(f"[{name}]: unknown section")
            continue
        idx = int(parts[1])
        g = parser[name]
        kind = g.get("distribution", "normal").strip()
        try:
            if kind == "normal":
                generators[idx] = GeneratorSpec.normal(_floats(g["mean"]), _floats(g.get("sdev", "1")), dim)
            elif kind == "uniform":
                generators[idx] = GeneratorSpec.uniform(_floats(g["lo"]), _floats(g["hi"]), dim)
            else:
                errors.append(f"group {idx}.distribution: unknown {kind!r}")
        except KeyError as exc:
            errors.append(f"group {idx}: missing key {exc.args[0]}")
        except (ValueError, InputError) as exc:
            errors.append(f"group {idx}: {exc}")
    if generators and sorted(generators) != list(range(1, len(generators) + 1)):
        errors.append(f"group sections must be numbered 1..s, got {sorted(generators)}")
    if errors:
        raise ScenarioError(errors)
    return ScenarioSpec(
        generators=tuple(generators[k] for k in sorted(generators)),
        rho=tuple(rho),
        n=n,
        kernel=kernel,
        **opts,
    )
