"""Command-line interface.

Exit codes: 0 when a command completes (a rejected hypothesis is still a
completed run), 2 for invalid input or degenerate data, 1 for anything else.
Errors are reported as a JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from typing import Sequence

from gmmd.errors import DegenerateVarianceError, InputError
from gmmd.estimators import block_sums, naive_from_sums, weighted_from_sums
from gmmd.inference import homogeneity_test
from gmmd.io import ParseError, parse_grouped_csv
from gmmd.kernels import FAMILIES, KernelSpec, median_heuristic_bandwidth
from gmmd.sim.harness import (
    SCHEMA_VERSION,
    run_alternative_study,
    run_null_calibration,
    run_power_curve,
    theoretical_reference,
    write_atomic,
)
from gmmd.sim.scenario import ScenarioError, parse_scenario
from gmmd.weights import WeightScheme, validate_assumptions

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would print usage and exit
        raise InputError(message)


def _bandwidth(text: str) -> str | float:
    if text == "median":
        return text
    try:
        h = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive float or 'median', got {text!r}") from None
    if not math.isfinite(h) or h <= 0:
        raise argparse.ArgumentTypeError(f"bandwidth must be > 0, got {text!r}")
    return h


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("data", help="grouped CSV file with header group,x1,...,xd ('-' for stdin)")
        p.add_argument("--kernel", choices=FAMILIES, default="gaussian",
                       help="gaussian: exp(-||x-y||^2/(2h^2)); laplacian: exp(-||x-y||_1/h)")
        p.add_argument("--bandwidth", type=_bandwidth, default="median",
                       help="kernel bandwidth h, or 'median' for the pooled median pairwise distance")
        p.add_argument("--gamma", type=float, default=0.5, help="weight parameter in (0, 1]")
        p.add_argument("--shuffle", action="store_true", help="permute points within groups using --seed")
    p.add_argument("--seed", type=_seed, default=None,
                   help="unsigned 64-bit seed (shuffling; overrides the scenario seed for simulate)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmmd", description="Generalized maximum mean discrepancy estimation and testing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    est = sub.add_parser("estimate", help="naive and weighted estimates")
    _add_common(est)

    tst = sub.add_parser("test", help="asymptotic-normal homogeneity test")
    _add_common(tst)
    tst.add_argument("--alpha", type=float, default=0.05)
    tst.add_argument("--variance-variant", choices=("theorem", "printed"), default="theorem")

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario file")
    sim.add_argument("scenario", help="scenario file (INI format)")
    _add_common(sim, data=False)
    sim.add_argument("--csv", help="also write per-replication records as CSV")

    val = sub.add_parser("validate-weights", help="check the weight conditions numerically")
    val.add_argument("--gamma", type=float, default=0.5)
    val.add_argument("--r-max", type=int, default=10_000)
    val.add_argument("--out")
    return parser


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _load_sample(args):
    table = parse_grouped_csv(_read(args.data))
    sample = table.to_sample()
    if args.shuffle:
        sample = sample.shuffled(args.seed or 0)
    h = median_heuristic_bandwidth(sample.pooled()) if args.bandwidth == "median" else args.bandwidth
    return sample, KernelSpec(args.kernel, h)


def cmd_estimate(args) -> int:
    sample, spec = _load_sample(args)
    scheme = WeightScheme(args.gamma)
    sums = block_sums(sample, spec, args.threads)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "command": "estimate",
            "naive": naive_from_sums(sums),
            "weighted": weighted_from_sums(sums, scheme),
            "gamma": scheme.gamma,
            "n": sample.n,
            "sizes": list(sample.sizes),
            "kernel": spec.family,
            "bandwidth_used": spec.bandwidth,
        },
        args.out,
    )
    return EXIT_OK


def cmd_test(args) -> int:
    sample, spec = _load_sample(args)
    scheme = WeightScheme(args.gamma)
    result = homogeneity_test(sample, spec, scheme, args.alpha, args.variance_variant, args.threads)
    payload = {"schema_version": SCHEMA_VERSION, "command": "test", **result.to_dict()}
    payload["sizes"] = list(sample.sizes)
    payload["config"] = {
        "kernel": spec.family,
        "bandwidth": args.bandwidth,
        "bandwidth_used": spec.bandwidth,
        "gamma": scheme.gamma,
        "alpha": args.alpha,
        "seed": args.seed or 0,
        "shuffle": args.shuffle,
        "variance_variant": args.variance_variant,
    }
    _emit(payload, args.out)
    _summary(f"test: z={result.z_score:.4f} p={result.p_value:.4g} reject={str(result.reject).lower()}", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    with open(args.scenario, encoding="utf-8") as fh:
        scn = parse_scenario(fh.read())
    if args.seed is not None:
        scn = replace(scn, seed=args.seed)
    if scn.study == "null":
        if not scn.is_null:
            raise ScenarioError(["scenario.study: 'null' requires identical group distributions"])
        report = run_null_calibration(scn, threads=args.threads)
    elif scn.study == "alternative":
        population_T, theory = theoretical_reference(scn)
        report = run_alternative_study(
            scn,
            population_T,
            math.sqrt(theory.sigma_sq),
            threads=args.threads,
            reference_extra={"sigma_sq": theory.sigma_sq, "sigma_sq_std_error": theory.std_error,
                             "mc_draws": theory.mc_draws},
        )
    else:
        if not scn.shift_grid:
            raise ScenarioError(["scenario.shift_grid: required for study = power"])
        curve = run_power_curve(scn, scn.shift_grid, threads=args.threads)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "power",
            "seed": scn.seed,
            "scenario": scn.to_dict(),
            "curve": [{"shift": s, "power": p} for s, p in curve],
        }
        _emit(payload, args.out)
        _summary("power " + " ".join(f"{s:g}:{p:.3f}" for s, p in curve), args.out)
        return EXIT_OK

    if args.out:
        write_atomic(args.out, report.to_json())
    else:
        sys.stdout.write(report.to_json())
    if args.csv:
        write_atomic(args.csv, report.records_csv())
    agg = report.aggregates
    _summary(
        f"{report.kind}: R={agg['replications']} mean_z={agg['mean_z']:.4f} var_z={agg['var_z']:.4f} "
        f"ks_z={agg['ks_z']:.4f} rejection_rate={agg['rejection_rate']:.4f} wall_time={report.wall_time_s:.1f}s",
        args.out,
    )
    return EXIT_OK


def _summary(line: str, out: str | None) -> None:
    # keep stdout clean for the JSON report when no --out is given
    print(line, file=sys.stdout if out else sys.stderr)


def cmd_validate_weights(args) -> int:
    report = validate_assumptions(WeightScheme(args.gamma), args.r_max)
    _emit({"schema_version": SCHEMA_VERSION, "command": "validate-weights", **report.to_dict()}, args.out)
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "validate-weights": cmd_validate_weights,
}


def _fail(code: int, kind: str, message: str, **extra) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise InputError("--threads must be >= 1")
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        return _fail(EXIT_INVALID, "scenario", str(exc), errors=exc.errors)
    except ParseError as exc:
        return _fail(EXIT_INVALID, "parse", str(exc), line=exc.line)
    except DegenerateVarianceError as exc:
        return _fail(EXIT_INVALID, "degenerate_variance", str(exc))
    except InputError as exc:
        return _fail(EXIT_INVALID, "invalid_input", str(exc))
    except OSError as exc:
        return _fail(EXIT_INVALID, "io", str(exc))
    except Exception as exc:  # noqa: BLE001
        return _fail(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
