"""Command-line front end.

Subcommands:

    circulate      excitation/hole circulation trace of one loop -> CSV
    ghz            build + run the GHZ protocol (ideal and noisy) -> CSV/JSON
    run            execute a schedule file -> JSON transcript
    validate-rwa   lab-frame vs rotating-frame sweep -> CSV

Flags take the units used on hardware data sheets: linear MHz for
frequencies and rates, ns for times; conversion to internal angular units
happens in `chiralghz.units` only.  Exit codes: 0 success, 2 usage error,
3 numerical-accuracy failure, 4 schedule-file parse failure.

The environment variable CHIRALGHZ_OUTDIR sets the directory used when
--out is not given.
"""

import argparse
import json
import math
import os
import sys
import warnings

from .analysis import (
    fidelity_vs_n,
    population_trace,
    reports_csv,
    reports_json,
    rwa_csv,
    rwa_sweep,
    trace_csv,
)
from .dynamics import IntegratorSettings, NoiseRates
from .errors import AccuracyError, ParseError
from .hamiltonian import LoopWindow, SystemConfig, loop_flux
from .loop3 import circulation_period, g0_for_swap_time
from .protocol import build_ghz_schedule, execute_ideal, execute_noisy
from .schedfile import parse as parse_schedule
from .states import fidelity as state_fidelity
from .states import ghz_target
from .units import mhz_to_rad_per_ns, rate_mhz_to_per_ns

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ACCURACY = 3
EXIT_PARSE = 4


class UsageError(ValueError):
    pass


def _parse_pi_multiple(text):
    if not text.endswith("pi"):
        raise UsageError(f"expected a multiple of pi like 0.5pi, got {text!r}")
    try:
        return float(text[:-2]) * math.pi
    except ValueError:
        raise UsageError(f"malformed angle {text!r}") from None


def _out_path(arg, default_name):
    if arg:
        return arg
    return os.path.join(os.environ.get("CHIRALGHZ_OUTDIR", "."), default_name)


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _num(x):
    return f"{x:.12g}"


def cmd_circulate(args):
    if args.excitations not in (1, 2):
        raise UsageError("--excitations must be 1 or 2")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    if args.g0 <= 0:
        raise UsageError("--g0 must be positive")
    flux = _parse_pi_multiple(args.flux)
    g0 = mhz_to_rad_per_ns(args.g0)
    config = SystemConfig.uniform(3, g0)
    window = LoopWindow((1, 2, 3), 0.0, circulation_period(g0).period,
                        (0.0, flux, 0.0), g0_override=g0)
    if abs(abs(loop_flux(window)) - math.pi / 2) > 1e-9:
        warnings.warn(
            f"flux {args.flux} is not a quarter turn; excitation transfer will "
            "be imperfect",
            UserWarning,
        )
    initial = "100" if args.excitations == 1 else "011"
    trace = population_trace(config, window, initial,
                             circulation_period(g0).period, args.samples)
    path = _out_path(args.out, "circulation.csv")
    _write(path, trace_csv(trace))
    return EXIT_OK


def cmd_ghz(args):
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    if args.T <= 0:
        raise UsageError("--T must be positive")
    if args.gamma < 0 or args.gamma_phi < 0:
        raise UsageError("rates must be >= 0")
    g0 = g0_for_swap_time(args.T)
    schedule = build_ghz_schedule(args.n, g0)
    noise = NoiseRates.uniform(
        args.n, rate_mhz_to_per_ns(args.gamma), rate_mhz_to_per_ns(args.gamma_phi)
    )
    step = args.step if args.step is not None else args.T / 500.0
    settings = IntegratorSettings(step=step)
    final, _ = execute_ideal(schedule, record_checkpoints=False)
    ideal_fid = state_fidelity(final, ghz_target(args.n))
    if noise.silent:
        noisy_fid = ideal_fid
    else:
        _, noisy_fid = execute_noisy(schedule, noise, settings)
    rows = [
        # the gamma = 0 row reports the exact-propagator run (no stepping)
        dict(n=args.n, gamma_per_ns=0.0, gamma_phi_per_ns=0.0, T_ns=args.T,
             fidelity=ideal_fid, step_ns=0.0),
        dict(n=args.n, gamma_per_ns=noise.decay[0], gamma_phi_per_ns=noise.dephasing[0],
             T_ns=args.T, fidelity=noisy_fid, step_ns=0.0 if noise.silent else step),
    ]
    if args.format == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
        path = _out_path(args.out, "ghz.json")
    else:
        header = "n,gamma_per_ns,gamma_phi_per_ns,T_ns,fidelity,step_ns"
        lines = [header]
        for r in rows:
            lines.append(",".join(
                str(r["n"]) if k == "n" else _num(r[k])
                for k in header.split(",")
            ))
        text = "\n".join(lines) + "\n"
        path = _out_path(args.out, "ghz.csv")
    _write(path, text)
    return EXIT_OK


def cmd_run(args):
    try:
        with open(args.schedule, "r") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.schedule}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = parse_schedule(text)
    config, schedule, noise = doc.to_runtime()
    if args.gamma is not None or args.gamma_phi is not None:
        gamma = rate_mhz_to_per_ns(args.gamma) if args.gamma is not None else 0.0
        gamma_phi = rate_mhz_to_per_ns(args.gamma_phi) if args.gamma_phi is not None else 0.0
        noise = NoiseRates.uniform(schedule.n_qubits, gamma, gamma_phi)
    final, transcript = execute_ideal(schedule, record_checkpoints=True)
    target = ghz_target(schedule.n_qubits)
    result = {
        "source": args.schedule,
        "n_qubits": schedule.n_qubits,
        "duration_ns": schedule.duration,
        "gamma_per_ns": noise.decay[0] if noise.decay else 0.0,
        "gamma_phi_per_ns": noise.dephasing[0] if noise.dephasing else 0.0,
        "checkpoints": [
            {"t_ns": t, "description": desc, "fidelity": fid}
            for (t, desc, _exp, fid) in transcript.entries
        ],
        "ideal_ghz_fidelity": state_fidelity(final, target),
    }
    if not noise.silent:
        step = args.step if args.step is not None else schedule.duration / 500.0
        _, noisy_fid = execute_noisy(schedule, noise, IntegratorSettings(step=step))
        result["noisy_ghz_fidelity"] = noisy_fid
        result["step_ns"] = step
    path = _out_path(args.out, "run.json")
    _write(path, json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_validate_rwa(args):
    parts = [p for p in args.ratios.split(",") if p.strip()]
    if not parts:
        raise UsageError("--ratios needs at least one value")
    try:
        ratios = [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"malformed ratio list: {exc}") from None
    if any(not 0 < r <= 0.2 for r in ratios):
        raise UsageError("ratios must lie in (0, 0.2]")
    points = rwa_sweep(ratios)
    path = _out_path(args.out, "rwa.csv")
    _write(path, rwa_csv(points))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chiralghz",
        description="Simulate chiral excitation circulation and GHZ generation "
        "in flux-threaded qubit loops.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("circulate", help="population trace of one loop window")
    p.add_argument("--excitations", type=int, default=1, help="1 or 2")
    p.add_argument("--flux", default="0.5pi", help="loop flux as a multiple of pi")
    p.add_argument("--g0", type=float, default=3.84899, help="coupling strength (MHz)")
    p.add_argument("--samples", type=int, default=601)
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=cmd_circulate)

    p = sub.add_parser("ghz", help="run the GHZ protocol, ideal and noisy")
    p.add_argument("--n", type=int, required=True, help="number of qubits (>= 2)")
    p.add_argument("--gamma", type=float, default=0.0, help="relaxation rate (MHz)")
    p.add_argument("--gamma-phi", dest="gamma_phi", type=float, default=0.0,
                   help="pure dephasing rate (MHz)")
    p.add_argument("--T", type=float, default=100.0, help="swap time (ns)")
    p.add_argument("--step", type=float, default=None, help="integrator step (ns)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path")
    p.set_defaults(func=cmd_ghz)

    p = sub.add_parser("run", help="execute a schedule file")
    p.add_argument("schedule", help="schedule file path")
    p.add_argument("--gamma", type=float, default=None,
                   help="override relaxation rate (MHz)")
    p.add_argument("--gamma-phi", dest="gamma_phi", type=float, default=None,
                   help="override dephasing rate (MHz)")
    p.add_argument("--step", type=float, default=None, help="integrator step (ns)")
    p.add_argument("--out", default=None, help="output JSON path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate-rwa", help="lab vs rotating frame sweep")
    p.add_argument("--ratios", required=True, help="comma-separated g0/detuning ratios")
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=cmd_validate_rwa)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except AccuracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main(argv=None))
