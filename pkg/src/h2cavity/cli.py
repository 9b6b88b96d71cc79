"""Command-line interface.

Subcommands: ``run`` (single trajectory), ``sweep`` (influx-ratio sweep of
the stable-molecule probability), ``gibbs-check`` (stationarity of the
truncated thermal field state under a paired emission/influx channel) and
``dump`` (basis or Hamiltonian debug artifacts).

Exit codes: 0 success, 1 validation error, 2 numerical abort, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .hilbert import InvalidStateError, Mode, ModeSpec, UnknownModeError
from .hamiltonian import (
    HermiticityError,
    TERM_BUILDERS,
    build_total,
    sparse_triplets_csv,
    transition_rules,
)
from .hilbert import enumerate_reachable
from .lindblad import apply_dissipator, apply_influx, gibbs_field_state, single_mode_channel
from .evolve import TraceDriftError, run
from . import experiments as xp

SWEEP_MODE_NAMES = {"omega-s": Mode.SPIN_E, "omega-n": Mode.SPIN_N}

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h2cavity",
        description="cavity-QED simulation of hydrogen molecule association")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evolve one scenario and emit outputs")
    p_run.add_argument("--config", type=Path, default=None,
                       help="JSON scenario file (default: shipped formation scenario)")
    p_run.add_argument("--out", type=Path, default=Path("out"))
    p_run.add_argument("--dt", type=float, default=None, help="override step size (s)")
    p_run.add_argument("--horizon", type=float, default=None,
                       help="override evolution horizon (s)")

    p_sweep = sub.add_parser("sweep", help="influx-ratio sweep of the molecule yield")
    p_sweep.add_argument("--mode", choices=sorted(SWEEP_MODE_NAMES), required=True)
    p_sweep.add_argument("--from", dest="start", type=float, default=0.0)
    p_sweep.add_argument("--to", dest="stop", type=float, default=0.5)
    p_sweep.add_argument("--step", type=float, default=0.05)
    p_sweep.add_argument("--t-eval", type=float, default=xp.EVALUATION_TIME)
    p_sweep.add_argument("--dt", type=float, default=1e-10)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", type=Path, default=Path("out"))

    p_gibbs = sub.add_parser("gibbs-check",
                             help="stationarity residual of the truncated thermal state")
    p_gibbs.add_argument("--mu", type=float, required=True)
    p_gibbs.add_argument("--cutoff", type=int, required=True)
    p_gibbs.add_argument("--gamma", type=float, default=1e7)
    p_gibbs.add_argument("--frequency", type=float, default=1e9)

    p_dump = sub.add_parser("dump", help="debug artifacts")
    p_dump.add_argument("--what", choices=["basis", "hamiltonian"], required=True)
    p_dump.add_argument("--config", type=Path, default=None)
    p_dump.add_argument("--out", type=Path, default=None,
                        help="output file (basis) or directory (hamiltonian); "
                             "default: stdout / current directory")
    return parser


def _load_config(path) -> xp.ExperimentConfig:
    if path is None:
        return xp.formation_experiment()
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise OSError(f"cannot read config {path}: {err}") from err
    return xp.config_from_json(text)


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.dt is not None or args.horizon is not None:
        dt = args.dt if args.dt is not None else config.dt
        horizon = args.horizon if args.horizon is not None else config.horizon
        config = replace(config, dt=dt, horizon=horizon,
                         sample_stride=xp._auto_stride(horizon, dt))
    started = time.perf_counter()
    trajectory = run(config)
    runtime = time.perf_counter() - started
    written = xp.emit_outputs(trajectory, config, args.out, runtime_s=round(runtime, 3))
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    mode = SWEEP_MODE_NAMES[args.mode]
    if args.step <= 0 or args.stop < args.start:
        raise xp.ConfigError("sweep range must be increasing with a positive step")
    n = int(round((args.stop - args.start) / args.step))
    values = [round(args.start + i * args.step, 12) for i in range(n + 1)]
    base = xp.sweep_base_config(mode, dt=args.dt, horizon=args.t_eval)
    started = time.perf_counter()
    result = xp.mu_sweep(mode, values, t_eval=args.t_eval, dt=args.dt,
                         base=base, max_workers=args.workers)
    runtime = time.perf_counter() - started
    config = replace(base, sweep=xp.SweepSettings(mode=mode, values=tuple(values),
                                                  t_eval=args.t_eval))
    written = xp.emit_outputs(result, config, args.out, runtime_s=round(runtime, 3))
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_gibbs_check(args) -> int:
    spec = ModeSpec(label=Mode.SPIN_E, frequency=args.frequency,
                    gamma_out=args.gamma, mu=args.mu, cutoff=args.cutoff)
    channel = single_mode_channel(spec)
    state = gibbs_field_state(spec, args.mu)
    residual = apply_dissipator(channel, state) + apply_influx(channel, state)
    residual_max = float(np.abs(residual).max())
    bound = args.gamma * args.mu ** args.cutoff
    print(f"mu={args.mu} cutoff={args.cutoff} gamma={args.gamma:g}")
    print(f"stationarity residual max |drho/dt| = {residual_max:.6e} 1/s")
    print(f"truncation bound gamma*mu^cutoff    = {bound:.6e} 1/s")
    print("OK" if residual_max <= bound or bound == 0 and residual_max == 0
          else "RESIDUAL EXCEEDS BOUND")
    return EXIT_OK if residual_max <= bound or bound == residual_max == 0 else EXIT_NUMERICAL


def _cmd_dump(args) -> int:
    config = _load_config(args.config)
    rules = transition_rules(config.mode_table, config.params,
                             force_influx=config.force_influx)
    basis = enumerate_reachable(config.initial, rules, config.mode_table)
    if args.what == "basis":
        text = basis.to_json()
        if args.out is None:
            print(text)
        else:
            Path(args.out).write_text(text + "\n")
            print(args.out)
        return EXIT_OK
    out_dir = Path(args.out) if args.out is not None else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, builder in TERM_BUILDERS.items():
        path = out_dir / f"hamiltonian_{name}.csv"
        path.write_text(sparse_triplets_csv(builder(basis, config.params)))
        print(path)
    path = out_dir / "hamiltonian_total.csv"
    path.write_text(sparse_triplets_csv(build_total(basis, config.params)))
    print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep,
                "gibbs-check": _cmd_gibbs_check, "dump": _cmd_dump}
    try:
        return handlers[args.command](args)
    except (xp.ConfigError, InvalidStateError, UnknownModeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TraceDriftError, HermiticityError, ArithmeticError) as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
