"""Command-line interface.

Subcommands:
  bounds    print a coherence certificate for the two-ring design
  design    write a sensing matrix to the text format
  soe       estimate the sparsity order of a measurement vector file
  recover   sparse-decode a measurement file against a matrix file
  simulate  run a figure-shaped Monte-Carlo sweep and write CSV files

Exit codes: 0 success, 2 configuration/usage errors, 1 runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .errors import (
    BudgetExceededError,
    ConfigError,
    ConvergenceError,
    InfeasibleError,
    RankDeficientError,
)
from .harness import (
    MATRIX_KINDS,
    load_config,
    run_guided_omp_sweep,
    run_soe_sweep,
    run_structure_cost_sweep,
    run_vander_comparison,
    scenario_matrix,
    write_csv,
)
from .matrixio import load_matrix, save_matrix
from .recovery import omp
from .soe import (
    CalibrationCache,
    blocking_params,
    calibrate_thresholds,
    estimate_order,
    extract_blocks,
)
from .vandermonde import coherence_bounds, optimal_radius

OVERLAP_SWEEP_VALUES = (1, 2, 4, 0)

FIGURE_PRESETS = {
    2: {},
    3: {"p": 0},
    4: {"m": 96},
    5: {
        "m": 96,
        "structured_support": True,
        "snr_start_db": -15.0,
        "snr_stop_db": 5.0,
    },
    6: {
        "m": 96,
        "structured_support": True,
        "snr_start_db": -20.0,
        "snr_stop_db": 20.0,
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soestim",
        description="Sparsity order estimation and structured sensing designs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bounds = sub.add_parser("bounds", help="coherence certificate for a design")
    p_bounds.add_argument("--n", type=int, required=True, help="Vandermonde rows")
    p_bounds.add_argument("--m", type=int, required=True, help="generator count")
    p_bounds.add_argument(
        "--c", type=float, default=None,
        help="inner-ring radius; defaults to the optimal one",
    )

    p_design = sub.add_parser("design", help="emit a sensing matrix")
    p_design.add_argument("--kind", choices=MATRIX_KINDS, required=True)
    p_design.add_argument("--n-signal", type=int, required=True, help="columns N")
    p_design.add_argument("--m", type=int, required=True, help="measurement rows")
    p_design.add_argument("--p", type=int, default=0, help="block advance (0 = none)")
    p_design.add_argument("--seed", type=int, default=0)
    p_design.add_argument("--output", required=True, help="output matrix file")

    p_soe = sub.add_parser("soe", help="estimate sparsity order from a measurement")
    p_soe.add_argument("--input", required=True, help="measurement vector file")
    p_soe.add_argument("--p", type=int, default=0, help="block advance (0 = none)")
    p_soe.add_argument("--variance", type=float, required=True, help="noise variance")
    p_soe.add_argument("--pfa", type=float, default=0.005)
    p_soe.add_argument("--mos-trials", type=int, default=2000)
    p_soe.add_argument("--seed", type=int, default=0)

    p_rec = sub.add_parser("recover", help="OMP decode a measurement")
    p_rec.add_argument("--matrix", required=True, help="sensing matrix file")
    p_rec.add_argument("--measurement", required=True, help="measurement vector file")
    p_rec.add_argument("--steps", type=int, required=True, help="OMP iterations")
    p_rec.add_argument("--residual-tol", type=float, default=None)

    p_sim = sub.add_parser("simulate", help="run a figure-shaped sweep")
    p_sim.add_argument("--figure", type=int, choices=sorted(FIGURE_PRESETS), required=True)
    p_sim.add_argument("--config", default=None, help="flat key=value config file")
    p_sim.add_argument("--output-dir", default=".", help="directory for CSV output")
    p_sim.add_argument(
        "--cache-dir", default=None,
        help="directory for calibration tables (default: <output-dir>/mos_cache)",
    )
    return parser


def _load_vector(path) -> np.ndarray:
    mat = load_matrix(path)
    if 1 not in mat.shape:
        raise ValueError(f"{path} holds a {mat.shape} matrix, expected a vector")
    return mat.reshape(-1)


def _cmd_bounds(args) -> int:
    c = args.c if args.c is not None else optimal_radius(args.n, args.m)
    cert = coherence_bounds(args.n, args.m, c)
    print(
        f"{cert.n},{cert.m},{cert.c!r},{cert.lower!r},"
        f"{cert.achieved!r},{cert.upper!r}"
    )
    return 0


def _cmd_design(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0])
    matrix, scheme = scenario_matrix(args.kind, args.n_signal, args.m, args.p, rng)
    save_matrix(args.output, matrix)
    if scheme is not None:
        print(f"ell={scheme.ell},k={scheme.k},p={scheme.p}")
    return 0


def _cmd_soe(args) -> int:
    b = _load_vector(args.input)
    scheme = blocking_params(b.shape[0], args.p)
    seed = CalibrationCache.derive_seed(
        scheme.ell, scheme.k, scheme.p, args.variance,
        args.pfa, args.mos_trials, args.seed,
    )
    cal = calibrate_thresholds(
        scheme.ell, scheme.k, args.variance, args.pfa,
        args.mos_trials, seed, p=scheme.p,
    )
    print(estimate_order(extract_blocks(b, scheme), cal))
    return 0


def _cmd_recover(args) -> int:
    a = load_matrix(args.matrix)
    b = _load_vector(args.measurement)
    result = omp(a, b, args.steps, residual_tol=args.residual_tol)
    print("index,re,im")
    for idx, amp in zip(result.estimate.support, result.estimate.amplitudes):
        print(f"{idx},{float(amp.real)!r},{float(amp.imag)!r}")
    print(f"residual_norm={result.residual_norm!r}", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config, preset_defaults=FIGURE_PRESETS[args.figure])
    out_dir = args.output_dir
    os.makedirs(out_dir, exist_ok=True)
    cache_dir = args.cache_dir or os.path.join(out_dir, "mos_cache")
    cache = CalibrationCache(cache_dir=cache_dir)

    written = []
    if args.figure == 2:
        for p in OVERLAP_SWEEP_VALUES:
            table = run_soe_sweep(replace(cfg, p=p), cache)
            path = os.path.join(out_dir, f"soe_{cfg.m}_{p}.csv")
            write_csv(path, table)
            written.append(path)
    elif args.figure == 3:
        table = run_guided_omp_sweep(cfg, cache)
        path = os.path.join(out_dir, f"soe_{cfg.m}_{cfg.p}_guided.csv")
        write_csv(path, table)
        written.append(path)
    elif args.figure == 4:
        for p in OVERLAP_SWEEP_VALUES:
            table = run_structure_cost_sweep(replace(cfg, p=p))
            path = os.path.join(out_dir, f"omp_{cfg.m}_{p}.csv")
            write_csv(path, table)
            written.append(path)
    elif args.figure == 5:
        table = run_vander_comparison(cfg)
        path = os.path.join(out_dir, f"vand_{cfg.m}.csv")
        write_csv(path, table)
        written.append(path)
    else:
        table = run_vander_comparison(cfg)
        path = os.path.join(out_dir, f"vand_{cfg.m}_wide.csv")
        write_csv(path, table)
        written.append(path)

    for path in written:
        print(path)
    return 0


_COMMANDS = {
    "bounds": _cmd_bounds,
    "design": _cmd_design,
    "soe": _cmd_soe,
    "recover": _cmd_recover,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        InfeasibleError,
        BudgetExceededError,
        RankDeficientError,
        ConvergenceError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # last resort: report, do not traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
