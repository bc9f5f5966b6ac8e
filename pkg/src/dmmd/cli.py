"""Command-line interface.

Three subcommands:

- ``dmmd decompose``  fit two matched CSV matrices and write the estimated
  signals, their joint/individual parts, the joint bases, and report.json
  into a fresh output directory;
- ``dmmd ranks``      print estimated total and joint ranks plus the
  principal-angle spectra as JSON on stdout;
- ``dmmd simulate``   run a preset benchmark and write results.csv and
  config.json.

Exit codes: 0 success, 2 bad flags or rank configuration, 3 input parse
failure, 4 numerical degeneracy. Output directories are populated in a
temporary sibling directory and renamed into place, so failures never leave
partial output. All flags can also be supplied through ``--config FILE``
(JSON, same key names as the long flags); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .exceptions import DegeneracyError, InputError, ParameterError
from .io import (
    dumps_json,
    read_matrix_csv,
    write_json,
    write_matrix_csv,
    write_results_csv,
)
from .iterative import DmmdIConfig
from .pipeline import DmmdResult, dmmd, double_standardize, variance_explained
from .rank_selection import estimate_joint_rank, estimate_total_rank
from .simulate import PRESET_NAMES, RESULT_COLUMNS, SimulationConfig, run_setting
from .solver import SolverConfig
from .subspaces import principal_angles
from .linalg import truncated_svd


def _default_threads(value):
    if value is not None:
        return value
    env = os.environ.get("DMMD_THREADS", "").strip()
    if env:
        try:
            parsed = int(env)
        except ValueError:
            raise ParameterError(f"DMMD_THREADS must be an integer, got {env!r}")
        if parsed < 1:
            raise ParameterError(f"DMMD_THREADS must be >= 1, got {parsed}")
        return parsed
    return os.cpu_count() or 1


def _add_matrix_flags(sub):
    sub.add_argument("--x1", help="CSV file with the first view")
    sub.add_argument("--x2", help="CSV file with the second view")
    sub.add_argument("--header", action="store_true", default=None,
                     help="inputs carry one header row")
    sub.add_argument("--delimiter", default=None, help="CSV delimiter (default ',')")


def _add_rank_flags(sub):
    sub.add_argument("--r1", type=int, help="total rank of view 1 (default: estimated)")
    sub.add_argument("--r2", type=int, help="total rank of view 2 (default: estimated)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmmd",
        description="Joint/individual low-rank decomposition of double-matched two-view data.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    dec = commands.add_parser("decompose", help="fit both views and write all parts as CSV")
    _add_matrix_flags(dec)
    dec.add_argument("--standardize", action="store_true", default=None,
                     help="double-standardize inputs first (rows and columns to mean 0, variance 1)")
    _add_rank_flags(dec)
    dec.add_argument("--rc", type=int, help="joint column rank (default: estimated)")
    dec.add_argument("--rr", type=int, help="joint row rank (default: estimated)")
    dec.add_argument("--variant", choices=["plain", "iterative"], default=None,
                     help="'iterative' also refines the joint bases (default plain)")
    dec.add_argument("--tol", type=float, default=None,
                     help="relative convergence threshold on the objective (default 1e-9)")
    dec.add_argument("--max-iter", type=int, default=None,
                     help="iteration cap for the solver (default 1000; outer cap for iterative)")
    dec.add_argument("--out", help="output directory (must not exist yet)")
    dec.add_argument("--config", help="JSON file supplying any of the above keys")
    dec.set_defaults(func=cmd_decompose)

    rk = commands.add_parser("ranks", help="estimate total and joint ranks, JSON on stdout")
    _add_matrix_flags(rk)
    _add_rank_flags(rk)
    rk.add_argument("--config", help="JSON file supplying any of the above keys")
    rk.set_defaults(func=cmd_ranks)

    sim = commands.add_parser("simulate", help="run a benchmark preset and write results.csv")
    sim.add_argument("--preset", help=f"one of {', '.join(PRESET_NAMES)} or 'custom'")
    sim.add_argument("--n", type=int, help="rows (custom preset)")
    sim.add_argument("--p", type=int, help="columns (custom preset)")
    sim.add_argument("--r1", type=int, help="total rank of view 1 (custom preset)")
    sim.add_argument("--r2", type=int, help="total rank of view 2 (custom preset)")
    sim.add_argument("--rc", type=int, help="joint column rank (custom preset)")
    sim.add_argument("--rr", type=int, help="joint row rank (custom preset)")
    sim.add_argument("--snr", type=float, help="signal-to-noise ratio (custom preset)")
    sim.add_argument("--reps", type=int, default=None, help="number of replications (default 1)")
    sim.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    sim.add_argument("--scale", type=float, default=None,
                     help="shrink dimensions and ranks proportionally, with floors (default 1.0)")
    sim.add_argument("--iterative", action="store_true", default=None,
                     help="also run the iterative variant each replication")
    sim.add_argument("--threads", type=int, default=None,
                     help="parallel replications (default: DMMD_THREADS or machine parallelism)")
    sim.add_argument("--out", help="output directory (must not exist yet)")
    sim.add_argument("--config", help="JSON file supplying any of the above keys")
    sim.set_defaults(func=cmd_simulate)
    return parser


def _apply_config_file(parser, argv):
    """Merge --config file values (lowest precedence) into the parse."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config file {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config file {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise InputError(f"config file {args.config} must hold a JSON object")
        for key, value in payload.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest) or dest in ("config", "command", "func"):
                raise ParameterError(f"config file key {key!r} is not a recognized flag")
            if getattr(args, dest) is None:
                setattr(args, dest, value)
    return args


def _require(parser_error, args, names):
    for name in names:
        if getattr(args, name, None) in (None, ""):
            parser_error(f"the following argument is required: --{name.replace('_', '-')}")


def _read_views(args):
    header = bool(args.header)
    delim = args.delimiter or ","
    x1, _ = read_matrix_csv(args.x1, has_header=header, delimiter=delim)
    x2, _ = read_matrix_csv(args.x2, has_header=header, delimiter=delim)
    if x1.shape != x2.shape:
        raise ParameterError(f"views must share a shape, got {x1.shape} and {x2.shape}")
    return x1, x2, delim


def _fresh_output_dir(out):
    target = Path(out)
    if target.exists():
        raise ParameterError(f"output directory {target} already exists; refusing to overwrite")
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def _publish(tmp: Path, target: Path) -> None:
    os.replace(tmp, target)


def _angles_payload(angles) -> dict:
    radians = [float(a) for a in angles]
    return {"radians": radians, "degrees": [float(np.degrees(a)) for a in radians]}


def cmd_decompose(args) -> int:
    x1, x2, delim = _read_views(args)
    if args.rc is not None and args.r1 is not None and args.r2 is not None and args.rc > min(args.r1, args.r2):
        raise ParameterError("r_c exceeds min(r1,r2)")
    if args.rr is not None and args.r1 is not None and args.r2 is not None and args.rr > min(args.r1, args.r2):
        raise ParameterError("r_r exceeds min(r1,r2)")
    target = _fresh_output_dir(args.out)

    timings = {}
    start = time.perf_counter()
    standardized = None
    if args.standardize:
        x1 = double_standardize(x1)
        x2 = double_standardize(x2)
        standardized = (x1, x2)
        timings["standardize_seconds"] = time.perf_counter() - start

    solver_cfg = SolverConfig()
    iter_cfg = DmmdIConfig()
    if args.tol is not None:
        solver_cfg.epsilon = args.tol
        iter_cfg.outer_epsilon = args.tol
        iter_cfg.inner.epsilon = args.tol
    if args.max_iter is not None:
        solver_cfg.t_max = args.max_iter
        iter_cfg.outer_t_max = args.max_iter

    fit_start = time.perf_counter()
    result = dmmd(
        x1, x2,
        r1=args.r1, r2=args.r2, rc=args.rc, rr=args.rr,
        variant=args.variant or "plain",
        solver_config=solver_cfg,
        iterative_config=iter_cfg,
    )
    timings["fit_seconds"] = time.perf_counter() - fit_start

    report = _decompose_report(args, result, x1, x2)

    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        views = result.decomposition.views
        for k, view in ((1, views[0]), (2, views[1])):
            write_matrix_csv(tmp / f"A{k}.csv", view.a, delimiter=delim)
            write_matrix_csv(tmp / f"Jc{k}.csv", view.j_col, delimiter=delim)
            write_matrix_csv(tmp / f"Ic{k}.csv", view.i_col, delimiter=delim)
            write_matrix_csv(tmp / f"Jr{k}.csv", view.j_row, delimiter=delim)
            write_matrix_csv(tmp / f"Ir{k}.csv", view.i_row, delimiter=delim)
        write_matrix_csv(tmp / "M.csv", result.decomposition.m_basis, delimiter=delim)
        write_matrix_csv(tmp / "N.csv", result.decomposition.n_basis, delimiter=delim)
        if standardized is not None:
            write_matrix_csv(tmp / "X1_standardized.csv", standardized[0], delimiter=delim)
            write_matrix_csv(tmp / "X2_standardized.csv", standardized[1], delimiter=delim)
        write_json(tmp / "report.json", report)
        timings["total_seconds"] = time.perf_counter() - start
        write_json(tmp / "timings.json", {k: round(v, 6) for k, v in timings.items()})
        _publish(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return 0


def _decompose_report(args, result: DmmdResult, x1, x2) -> dict:
    views = result.decomposition.views
    ranks = result.ranks
    report = {
        "command": "decompose",
        "inputs": {
            "x1": args.x1,
            "x2": args.x2,
            "has_header": bool(args.header),
            "standardize": bool(args.standardize),
            "shape": list(x1.shape),
        },
        "config": {
            "variant": result.variant,
            "tol": args.tol,
            "max_iter": args.max_iter,
            "overrides": {k: getattr(args, k) for k in ("r1", "r2", "rc", "rr")},
        },
        "ranks": {
            "r1": ranks.r1,
            "r2": ranks.r2,
            "rc": ranks.rc,
            "rr": ranks.rr,
            "sources": result.rank_sources,
        },
        "principal_angles": {
            "column": _angles_payload(result.angles_col),
            "row": _angles_payload(result.angles_row),
        },
        "variance_explained": {
            "view1": variance_explained(x1, views[0]),
            "view2": variance_explained(x2, views[1]),
        },
        "objective_traces": {
            "view1": [float(v) for v in views[0].objective_trace],
            "view2": [float(v) for v in views[1].objective_trace],
        },
        "iterations": {"view1": views[0].iterations, "view2": views[1].iterations},
        "converged": {"view1": views[0].converged, "view2": views[1].converged},
        "warnings": list(result.warnings),
    }
    if result.outer_objective_trace is not None:
        report["objective_traces"]["outer_sum"] = [float(v) for v in result.outer_objective_trace]
    return report


def cmd_ranks(args) -> int:
    x1, x2, _ = _read_views(args)
    flags = []

    def total(x, override, name):
        if override is not None:
            return override
        est, split = estimate_total_rank(x, return_split=True)
        if split.low_confidence:
            flags.append(f"{name}_low_confidence")
        return est

    r1 = total(x1, args.r1, "r1")
    r2 = total(x2, args.r2, "r2")
    angles = {}
    joint = {}
    for direction, key in (("column", "angles_col"), ("row", "angles_row")):
        b1 = truncated_svd(x1, r1).u if direction == "column" else truncated_svd(x1, r1).v
        b2 = truncated_svd(x2, r2).u if direction == "column" else truncated_svd(x2, r2).v
        pa = principal_angles(b1, b2)
        angles[key] = [float(a) for a in pa.angles]
        est, split = estimate_joint_rank(pa.angles, return_split=True)
        if split.low_confidence:
            flags.append(f"{'rc' if direction == 'column' else 'rr'}_low_confidence")
        joint[direction] = est

    payload = {
        "r1": int(r1),
        "r2": int(r2),
        "rc": int(joint["column"]),
        "rr": int(joint["row"]),
        "angles_col": angles["angles_col"],
        "angles_row": angles["angles_row"],
        "flags": flags,
    }
    sys.stdout.write(dumps_json(payload))
    return 0


def cmd_simulate(args) -> int:
    preset = args.preset
    if preset is None:
        raise ParameterError("--preset is required")
    reps = args.reps if args.reps is not None else 1
    seed = args.seed if args.seed is not None else 0
    scale = args.scale if args.scale is not None else 1.0
    threads = _default_threads(args.threads)
    methods = ("pl", "tsvd", "dmmd") + (("dmmd_i",) if args.iterative else ())
    target = _fresh_output_dir(args.out)

    if preset == "custom":
        for name in ("n", "p", "r1", "r2", "rc", "rr", "snr"):
            if getattr(args, name) is None:
                raise ParameterError(f"--{name} is required with --preset custom")
        rows = _run_custom(args, reps, seed, methods, threads)
        frame = {"n": args.n, "p": args.p, "snr": args.snr,
                 "r1": args.r1, "r2": args.r2, "rc": args.rc, "rr": args.rr}
    elif preset in PRESET_NAMES:
        rows = run_setting(preset, reps, scale=scale, seed=seed, methods=methods, threads=threads)
        frame = None
    else:
        raise ParameterError(f"invalid preset {preset!r}; choose one of {PRESET_NAMES} or 'custom'")

    config_echo = {
        "command": "simulate",
        "preset": preset,
        "reps": reps,
        "seed": seed,
        "scale": scale,
        "methods": list(methods),
        "columns": list(RESULT_COLUMNS),
    }
    if frame is not None:
        config_echo["custom"] = frame

    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        write_results_csv(tmp / "results.csv", rows, RESULT_COLUMNS)
        write_json(tmp / "config.json", config_echo)
        _publish(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return 0


def _run_custom(args, reps, seed, methods, threads):
    """Fixed-configuration replications outside the named presets."""
    from concurrent.futures import ThreadPoolExecutor

    from .simulate import _rep_rows_custom

    def work(rep):
        return _rep_rows_custom(args.n, args.p, args.r1, args.r2, args.rc, args.rr,
                                args.snr, rep, seed, methods)

    if threads == 1:
        chunks = [work(rep) for rep in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, range(reps)))
    return [row for chunk in chunks for row in chunk]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, sys.argv[1:] if argv is None else list(argv))
        if args.command in ("decompose", "ranks"):
            _require(parser.error, args, ["x1", "x2"])
        if args.command in ("decompose", "simulate"):
            _require(parser.error, args, ["out"])
        return args.func(args)
    except ParameterError as exc:
        print(f"dmmd: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"dmmd: {exc}", file=sys.stderr)
        return 3
    except DegeneracyError as exc:
        print(f"dmmd: {exc}", file=sys.stderr)
        return 4


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
