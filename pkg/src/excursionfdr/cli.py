"""Command-line interface.

Subcommands:

* ``signal``    generate a test signal image and write it as a field file
* ``cr``        fit confidence regions for a sample stack at one level
* ``simulate``  run the Monte Carlo harness and emit CSV (and optional SVG)
* ``eval``      score a fitted regions file against a truth signal

Exit codes: 0 success, 1 usage error (bad flags), 2 data error (bad or
mismatched input files).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .charts import render_fdr_chart
from .fieldfile import FieldFileError, read_field_file, write_field_file
from .lattice import LatticeShape, RegionSet, SampleStack, ScalarField
from .regions import Method, from_sample_stack, proportions_from_sets
from .simulate import (
    NoiseSpec,
    SignalSpec,
    SimulationConfig,
    SimulationResult,
    generate_signal,
    run_simulation,
)

__all__ = ["main"]

_CSV_HEADER = (
    "signal,signal_fwhm,noise_fwhm,n,reps,alpha,c,method,"
    "empirical_fdr,fdr_se,empirical_fndr,fndr_se"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # route argparse's own failures through our exit-code convention
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _sample_count(text: str) -> int:
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("need at least 2 samples")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = _nonneg_float(text)
    if value == 0:
        raise argparse.ArgumentTypeError("expected a positive number")
    return value


def _alpha_level(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {value}")
    return value


def _seed_value(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit an unsigned 64-bit integer")
    return value


def _float_repr(x: float) -> str:
    # shortest round-trip form; pinned for byte-stable CSVs
    return repr(float(x))


def _build_parser() -> _Parser:
    parser = _Parser(prog="excursionfdr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_signal = sub.add_parser("signal", help="generate a test signal image")
    p_signal.add_argument("--signal", required=True, choices=["ramp", "step", "circle"])
    p_signal.add_argument("--signal-fwhm", type=_nonneg_float, default=0.0)
    p_signal.add_argument("--radius", type=_positive_float, default=12.0)
    p_signal.add_argument("--width", type=_positive_int, default=50)
    p_signal.add_argument("--height", type=_positive_int, default=50)
    p_signal.add_argument("--out", required=True)
    p_signal.set_defaults(func=_cmd_signal)

    p_cr = sub.add_parser("cr", help="fit confidence regions for a sample stack")
    p_cr.add_argument("--input", required=True)
    p_cr.add_argument("--c", type=float, required=True)
    p_cr.add_argument("--alpha", type=_alpha_level, default=0.05)
    p_cr.add_argument("--method", required=True, choices=[m.value for m in Method])
    p_cr.add_argument("--joint-doubling", choices=["on", "off"], default="on")
    p_cr.add_argument("--out", required=True)
    p_cr.set_defaults(func=_cmd_cr)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo harness")
    p_sim.add_argument("--signal", required=True, choices=["ramp", "step", "circle"])
    p_sim.add_argument("--signal-fwhm", type=_nonneg_float, default=0.0)
    p_sim.add_argument("--radius", type=_positive_float, default=12.0)
    p_sim.add_argument("--noise-fwhm", type=_nonneg_float, default=0.0)
    p_sim.add_argument("--noise-sd", type=_positive_float, default=1.0)
    p_sim.add_argument("--width", type=_positive_int, default=50)
    p_sim.add_argument("--height", type=_positive_int, default=50)
    p_sim.add_argument("--n", type=_sample_count, default=80)
    p_sim.add_argument("--reps", type=_positive_int, default=1000)
    p_sim.add_argument("--alpha", type=_alpha_level, default=0.05)
    p_sim.add_argument("--c-min", type=float, default=-2.0)
    p_sim.add_argument("--c-max", type=float, default=2.0)
    p_sim.add_argument("--c-step", type=_positive_float, default=0.2)
    p_sim.add_argument(
        "--methods",
        default="upper-bh,lower-bh,lower-adaptive,joint",
        help="comma-separated method list, order preserved in the CSV",
    )
    p_sim.add_argument("--seed", type=_seed_value, default=0)
    p_sim.add_argument("--workers", type=_positive_int, default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--svg", default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_eval = sub.add_parser("eval", help="score fitted regions against a truth signal")
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--regions", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    return parser


def _cmd_signal(args) -> int:
    spec = SignalSpec(args.signal, signal_fwhm=args.signal_fwhm, radius=args.radius)
    shape = LatticeShape((args.height, args.width))
    write_field_file(args.out, generate_signal(spec, shape))
    return 0


def _sidecar_path(regions_path: str) -> str:
    return str(regions_path) + ".json"


def _cmd_cr(args) -> int:
    data = read_field_file(args.input)
    if not isinstance(data, SampleStack):
        raise ValueError(f"{args.input}: needs a sample stack (count >= 2), found a single field")
    method = Method.from_string(args.method)
    regions = from_sample_stack(
        data,
        args.c,
        args.alpha,
        method,
        joint_doubling=args.joint_doubling == "on",
    )

    # absent sides get their vacuous counterparts: an untested direction
    # constrains nothing
    upper = regions.upper if regions.upper is not None else RegionSet.empty(data.shape, data.mask)
    lower = regions.lower
    if lower is None:
        lower = RegionSet.full(data.shape, data.mask)
    planes = np.stack(
        [upper.member.astype(np.float64), lower.member.astype(np.float64)]
    )
    write_field_file(args.out, SampleStack(data.shape, planes, data.mask))

    sidecar = {
        "c": args.c,
        "alpha": args.alpha,
        "method": method.value,
        "p_k": regions.stepup.threshold,
        "k": regions.stepup.k,
        "n": data.n,
        "nu": float(data.n - 1),
    }
    with open(_sidecar_path(args.out), "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, sort_keys=True, indent=2)
        handle.write("\n")
    return 0


def _parse_methods(text: str) -> tuple[Method, ...]:
    names = [piece.strip() for piece in text.split(",") if piece.strip()]
    if not names:
        raise UsageError("--methods must name at least one method")
    try:
        return tuple(Method.from_string(name) for name in names)
    except ValueError as exc:
        raise UsageError(str(exc))


def _parse_c_grid(c_min: float, c_max: float, c_step: float) -> tuple[float, ...]:
    if c_min > c_max:
        raise UsageError(f"--c-min {c_min} exceeds --c-max {c_max}")
    count = int((c_max - c_min) / c_step + 1e-9) + 1
    return tuple(round(c_min + i * c_step, 10) for i in range(count))


def _result_csv(result: SimulationResult) -> str:
    config = result.config
    lines = [_CSV_HEADER]
    for ci, c in enumerate(config.c_grid):
        for mi, method in enumerate(config.methods):
            lines.append(
                ",".join(
                    [
                        config.signal.kind,
                        _float_repr(config.signal.signal_fwhm),
                        _float_repr(config.noise.fwhm),
                        str(config.n),
                        str(config.reps),
                        _float_repr(config.alpha),
                        _float_repr(c),
                        method.value,
                        _float_repr(result.fdr[ci, mi]),
                        _float_repr(result.fdr_se[ci, mi]),
                        _float_repr(result.fndr[ci, mi]),
                        _float_repr(result.fndr_se[ci, mi]),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def _cmd_simulate(args) -> int:
    methods = _parse_methods(args.methods)
    c_grid = _parse_c_grid(args.c_min, args.c_max, args.c_step)
    try:
        config = SimulationConfig(
            signal=SignalSpec(args.signal, signal_fwhm=args.signal_fwhm, radius=args.radius),
            noise=NoiseSpec(sd=args.noise_sd, fwhm=args.noise_fwhm),
            shape=(args.height, args.width),
            n=args.n,
            reps=args.reps,
            alpha=args.alpha,
            c_grid=c_grid,
            methods=methods,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))

    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    result = run_simulation(config, workers=workers)

    with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(_result_csv(result))
    if args.svg is not None:
        with open(args.svg, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(render_fdr_chart(result, config.alpha))
    return 0


def _cmd_eval(args) -> int:
    truth = read_field_file(args.truth)
    if not isinstance(truth, ScalarField):
        raise ValueError(f"{args.truth}: truth must be a single field, found a stack")
    regions_data = read_field_file(args.regions)
    if not isinstance(regions_data, SampleStack) or regions_data.n != 2:
        raise ValueError(f"{args.regions}: expected exactly 2 region planes")
    try:
        with open(_sidecar_path(args.regions), "r", encoding="utf-8") as handle:
            sidecar = json.load(handle)
        method = Method.from_string(sidecar["method"])
        c = float(sidecar["c"])
        alpha = float(sidecar["alpha"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"{_sidecar_path(args.regions)}: unreadable sidecar ({exc})")

    if truth.shape != regions_data.shape:
        raise ValueError(
            f"lattice mismatch: truth {truth.shape.dims} vs regions {regions_data.shape.dims}"
        )

    upper = RegionSet(regions_data.shape, regions_data.samples[0] != 0.0, regions_data.mask)
    lower = RegionSet(regions_data.shape, regions_data.samples[1] != 0.0, regions_data.mask)
    wants_upper = method in (Method.UPPER_BH, Method.JOINT_BH)
    wants_lower = method in (Method.LOWER_BH, Method.LOWER_ADAPTIVE, Method.JOINT_BH)
    props = proportions_from_sets(
        method,
        truth,
        c,
        upper if wants_upper else None,
        lower if wants_lower else None,
    )

    print(
        "c,alpha,method,fdp,fndp,false_discoveries,discoveries,"
        "false_nondiscoveries,nondiscoveries"
    )
    print(
        ",".join(
            [
                _float_repr(c),
                _float_repr(alpha),
                method.value,
                _float_repr(props.fdp),
                _float_repr(props.fndp),
                str(props.false_discoveries),
                str(props.discoveries),
                str(props.false_nondiscoveries),
                str(props.nondiscoveries),
            ]
        )
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FieldFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
