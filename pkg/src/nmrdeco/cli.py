"""Command-line front end.

Exit status: 0 success, 1 bad input (missing file, syntax error, bad flag),
2 internal invariant violation (including a failed oracle check).
"""

import argparse
import json
import math
import re
import sys
from typing import List, Optional

import numpy as np

from . import __version__, experiments, fitting, nmr, records
from ._kernels import BACKEND
from .core import InvariantError, evolve
from .sequence import (
    CompileError,
    SequenceSyntaxError,
    compile_sequence,
    decoupled_at_start,
    load_sequence,
)
from .sequence.lexer import parse_angle_text

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2

_QUANTITY_RE = re.compile(r"\s*(?P<num>[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)\s*(?P<unit>deg|ms|us|s)?\s*")
_UNIT_SCALE = {None: 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6, "deg": math.pi / 180}


class InputError(ValueError):
    pass


def parse_quantity(text: str, default_unit: Optional[str] = None) -> float:
    """``50.3deg`` -> radians, ``3.5ms`` -> seconds, ``pi/2`` -> radians, ``7`` -> 7."""
    m = _QUANTITY_RE.fullmatch(text)
    if m:
        unit = m["unit"] or default_unit
        return float(m["num"]) * _UNIT_SCALE[unit]
    parsed = parse_angle_text(text)
    if parsed and parsed[0] == "pi":
        return parsed[1] * math.pi / parsed[2]
    raise InputError(f"cannot parse quantity {text!r}")


def parse_grid(text: str) -> experiments.Grid:
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"grid must be start:stop:step[unit], got {text!r}")
    m = _QUANTITY_RE.fullmatch(parts[2])
    unit = m["unit"] if m else None
    start, stop, step = (parse_quantity(p, unit) for p in parts)
    if not step > 0:
        raise InputError("grid step must be positive")
    if stop < start:
        raise InputError("grid stop lies before start")
    return experiments.Grid(start, stop, step)


def parse_bindings(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise InputError(f"--bind expects sym=value, got {item!r}")
        out[name.strip()] = parse_quantity(value.strip())
    return out


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        records.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _f(x: float) -> str:
    # round first so that -1e-17 prints as +0.000000
    return f"{round(x, 9) + 0.0:+.6f}"


def _c(z: complex) -> str:
    return f"{_f(z.real)}{_f(z.imag)}j"


def _fmt_matrix(m: np.ndarray) -> str:
    return "\n".join("  " + " ".join(_f(x) for x in row) for row in m)


def cmd_simulate(args) -> int:
    if not args.sequence:
        raise InputError("simulate needs --sequence")
    system = nmr.load_system(args.system)
    try:
        seq = load_sequence(args.sequence)
    except SequenceSyntaxError as exc:
        raise SequenceSyntaxError(f"{args.sequence}: {exc.message}", exc.line, exc.col) from None
    bind = parse_bindings(args.bind)
    env = decoupled_at_start(seq, system)
    rho = evolve(nmr.initial_state(system, env), compile_sequence(seq, system, bind))
    rho = nmr.acquire_decoupled(rho, env, system).validate()
    kept = nmr.subsystem(system, [l for l in system.labels if l not in env])
    peaks = []
    for a in kept.labels:
        for b in kept.labels:
            if a != b:
                pk = nmr.peak_amplitudes(rho, a, b, kept)
                peaks.append({"observed": a, "partner": b, "low": [pk.low.real, pk.low.imag], "high": [pk.high.real, pk.high.imag]})
    if args.format == "json":
        doc = {
            "labels": list(kept.labels),
            "traced": env,
            "real": rho.mat.real.tolist(),
            "imag": rho.mat.imag.tolist(),
            "peaks": peaks,
        }
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    elif args.out:
        lines = ["row,col,value_re,value_im"]
        for (i, j), v in np.ndenumerate(rho.mat):
            lines.append(f"{i},{j},{records._g12(v.real)},{records._g12(v.imag)}")
        records.atomic_write(args.out, "\n".join(lines) + "\n")
    if not args.out or args.format != "json":
        lab = ",".join(kept.labels)
        print(f"spins: {lab}" + (f"  (traced out: {','.join(env)})" if env else ""))
        print("real part:")
        print(_fmt_matrix(rho.mat.real))
        print("imaginary part:")
        print(_fmt_matrix(rho.mat.imag))
        print("peak amplitudes (observed/partner: low, high):")
        for p in peaks:
            lo, hi = complex(*p["low"]), complex(*p["high"])
            print(f"  {p['observed']}/{p['partner']}: {_c(lo)}, {_c(hi)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.scenario:
        raise InputError("sweep needs --scenario")
    if not args.grid:
        raise InputError("sweep needs --grid")
    if args.scenario not in experiments.SCENARIOS:
        raise InputError(f"unknown scenario {args.scenario!r}; known: {', '.join(sorted(experiments.SCENARIOS))}")
    grid = parse_grid(args.grid)
    fixed = parse_bindings(args.bind)
    system = nmr.load_system(args.system) if args.system else None
    result = experiments.sweep(args.scenario, grid, fixed, system, args.system)
    if args.noise:
        if args.noise < 0:
            raise InputError("--noise must be non-negative")
        result = fitting.inject_noise(result, args.noise, args.seed or 0)
    text = records.sweep_to_csv(result) if args.format == "csv" else records.sweep_to_json(result)
    _emit(text, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    if not args.input:
        raise InputError("fit needs an input sweep file")
    data = records.read_sweep(args.input)
    fit = fitting.fit_sinusoid(data, args.use)
    text = records.fit_to_csv(fit) if args.format == "csv" else records.fit_to_json(fit)
    _emit(text, args.out)
    return EXIT_OK


def oracle_check(max_env: int = 8, seed: int = 0) -> dict:
    """Closed-form laws against full simulation; returns max deviations and limits."""
    thetas = np.linspace(0, 2 * np.pi, 37)
    times = np.linspace(0, 0.02, 41)
    report = {}

    dev = 0.0
    for th in thetas:
        dev = max(dev, abs(experiments.scenario_one_qubit(th).coherence - experiments.coherence_closed(th)))
    report["one_qubit"] = {"max_deviation": dev, "tolerance": 1e-10}

    dev = 0.0
    for n in range(1, max_env + 1):
        for th in thetas:
            dev = max(dev, experiments.scenario_n_environment(th, n).deviation)
    report["n_environment"] = {"max_deviation": dev, "tolerance": 1e-9}

    dev = 0.0
    j13, j23 = 9.23, 201.3
    for t in times:
        red = experiments.scenario_dq_evolution(t)
        dev = max(dev, abs(experiments.dq_coherence(red) - experiments.dq_factor(t, [(j13, j23)])))
    report["dq_evolution"] = {"max_deviation": dev, "tolerance": 1e-9}

    dev = 0.0
    for t in times:
        red = experiments.scenario_dq_evolution(t, apply_readout=True)
        target = experiments.dq_readout_matrix(experiments.dq_factor(t, [(j13, j23)]))
        dev = max(dev, float(np.abs(np.eye(4) - 4 * red.mat - target).max()))
    report["dq_readout"] = {"max_deviation": dev, "tolerance": 1e-9}

    rng = np.random.default_rng(seed)
    dev = 0.0
    for k in (2, 3, 4):
        couplings = rng.uniform(5, 250, size=(k, 2))
        for t in np.linspace(0, 0.02, 21):
            dev = max(dev, experiments.scenario_multi_env_dq(t, couplings).deviation)
    report["multi_env_dq"] = {"max_deviation": dev, "tolerance": 1e-9}
    return report


def cmd_oracle_check(args) -> int:
    report = oracle_check(args.max_env, args.seed or 0)
    failed = [k for k, v in report.items() if not v["max_deviation"] <= v["tolerance"]]
    text = json.dumps({"backend": BACKEND, "checks": report, "passed": not failed}, indent=2, sort_keys=True) + "\n"
    if args.out:
        records.atomic_write(args.out, text)
    for name, v in report.items():
        status = "FAIL" if name in failed else "ok"
        print(f"{status:4s} {name:14s} max deviation {v['max_deviation']:.3e} (tolerance {v['tolerance']:.0e})")
    if failed:
        raise InvariantError(f"oracle check failed: {', '.join(failed)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmrdeco", description="Simulate decoherence of coupled nuclear spins.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="csv"):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=fmt_default)

    p = sub.add_parser("simulate", help="run a sequence file and print the final state")
    p.add_argument("--system", required=True)
    p.add_argument("--sequence")
    p.add_argument("--bind", action="append", metavar="SYM=VALUE")
    common(p, "json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="evaluate a scenario over a parameter grid")
    p.add_argument("--scenario", choices=sorted(experiments.SCENARIOS))
    p.add_argument("--system")
    p.add_argument("--grid", metavar="START:STOP:STEP[UNIT]")
    p.add_argument("--bind", action="append", metavar="SYM=VALUE")
    p.add_argument("--noise", type=float, default=0.0, metavar="FRACTION")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit a sinusoid to a sweep file")
    p.add_argument("input", nargs="?")
    p.add_argument("--use", choices=["re", "im", "abs"], default="re")
    common(p, "json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("oracle-check", help="compare closed-form laws with brute-force simulation")
    p.add_argument("--max-env", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InvariantError as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SequenceSyntaxError, CompileError, InputError, fitting.FitError, records.RecordFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
