"""
Command line for the recovery benchmarks.

    python bench.py run specs/gaussian_s4.json [--seed 7] [--output out.csv]
    python bench.py analyze pmin --k-max 20 --t 0.1 0.3 0.5
    python bench.py analyze drange --s-max 64 --noise 0 0.1
    python bench.py recover --matrix A.txt --y y.txt --algo amop [--t 0.3 --eps 1e-6 --cap-k 8]

Exit codes: 0 success, 1 rejected input or spec, 2 any other failure.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from amop import AmopConfig, AmopRecovery
from cosamp import CosampRecovery
from data_manager import ResultsManager
from errors import RejectedInputError
from experiment import RESULTS_DIR, BENCH_WORKERS, ExperimentSpec, run_experiment
from matrix_io import read_matrix, read_vector
from omp import OmpRecovery
from progress import format_step

logger = logging.getLogger("bench")

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_FAILED = 2


def _log_step(step: dict):
    logger.info(format_step(step))


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Override base_seed of the experiment.")
    common.add_argument("--verbose", "-v", action="store_true", help="Log progress events at INFO.")
    common.add_argument("--results-dir", default=RESULTS_DIR, help=f"Results directory (default: {RESULTS_DIR})")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="bench", description="Adaptive OMP sparse-recovery benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Run a JSON experiment spec and write its CSV.")
    run.add_argument("spec", help="Path to the experiment spec (JSON).")
    run.add_argument("--output", default=None, help="CSV path; relative paths land in the results directory.")
    run.add_argument("--workers", type=int, default=BENCH_WORKERS, help=f"Trial threads (default: {BENCH_WORKERS})")

    analyze = sub.add_parser("analyze", help="Emit closed-form analysis tables.")
    kinds = analyze.add_subparsers(dest="table", required=True)
    pmin = kinds.add_parser("pmin", parents=[common], help="Energy-locking lower bound p_min(K, T).")
    pmin.add_argument("--k-max", type=int, required=True, help="Largest K (rows run 1..K).")
    pmin.add_argument("--t", type=float, nargs="+", required=True, help="Thresholds T in (0, 1].")
    pmin.add_argument("--output", default="pmin.csv")
    drange = kinds.add_parser("drange", parents=[common], help="Admissible dynamic range curve.")
    drange.add_argument("--s-max", type=int, required=True, help="Largest sparsity (rows run 2..s).")
    drange.add_argument("--noise", type=float, nargs="+", required=True, help="Noise bounds.")
    drange.add_argument("--output", default="drange.csv")

    recover = sub.add_parser("recover", parents=[common], help="Recover one instance and print JSON.")
    recover.add_argument("--matrix", required=True, help="Matrix file ('m N field' header, row-major).")
    recover.add_argument("--y", required=True, help="Measurement vector file (m x 1).")
    recover.add_argument("--algo", choices=["amop", "omp", "cosamp"], required=True)
    recover.add_argument("--t", type=float, default=None, help="AMOP relative-drop threshold.")
    recover.add_argument("--eps", type=float, default=None, help="Relative residual halting tolerance.")
    recover.add_argument("--cap-k", type=int, default=None, help="AMOP per-iteration selection cap.")
    recover.add_argument("--sparsity", type=int, default=None, help="Sparsity level (required for cosamp).")
    recover.add_argument("--max-iters", type=int, default=None, help="Iteration limit (default: m).")
    return parser


def cmd_run(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    callback = _log_step if args.verbose else None
    result = run_experiment(spec, step_callback=callback, workers=args.workers)
    path = ResultsManager(args.results_dir).save_result(result, args.output)
    print(path)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.table == "pmin":
        spec = ExperimentSpec(kind="PminTable", name="pmin", k_max=args.k_max, thresholds=list(args.t), output=args.output)
    else:
        spec = ExperimentSpec(kind="DynamicRangeCurve", name="drange", s_max=args.s_max, noise_levels=list(args.noise), output=args.output)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    result = run_experiment(spec, step_callback=_log_step if args.verbose else None)
    print(ResultsManager(args.results_dir).save_result(result))
    return EXIT_OK


def _encode(values: np.ndarray) -> list:
    if np.iscomplexobj(values):
        return [[float(v.real), float(v.imag)] for v in values]
    return [float(v) for v in values]


def cmd_recover(args) -> int:
    A = read_matrix(args.matrix)
    y = read_vector(args.y)
    m = A.shape[0]
    callback = _log_step if args.verbose else None
    eps = args.eps if args.eps is not None else 1e-6
    max_iters = args.max_iters if args.max_iters is not None else m

    if args.algo == "amop":
        overrides = {"halt_eps": eps, "max_iters": max_iters}
        if args.t is not None:
            overrides["threshold"] = args.t
        if args.cap_k is not None:
            overrides["cap_k"] = args.cap_k
        cfg = AmopConfig.for_measurements(m, **overrides)
        solver = AmopRecovery(cfg, step_callback=callback)
        params = cfg.to_dict()
    elif args.algo == "omp":
        solver = OmpRecovery(eps, max_iters, step_callback=callback)
        params = {"halt_eps": eps, "max_iters": max_iters}
    else:
        if args.sparsity is None:
            raise RejectedInputError("cosamp needs --sparsity")
        solver = CosampRecovery(args.sparsity, eps, max_iters, step_callback=callback)
        params = {"sparsity": args.sparsity, "halt_eps": eps, "max_iters": max_iters}

    result = solver.recover(A, y)
    print(json.dumps({
        "algorithm": solver.name,
        "params": params,
        "halt_reason": result.halt_reason.value,
        "iterations": result.iterations,
        "support": [int(j) for j in result.estimate.support],
        "values": _encode(result.estimate.values),
        "residual_history": result.residual_history,
    }, indent=2))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "analyze": cmd_analyze,
    "recover": cmd_recover,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO if args.verbose else os.getenv("AMOP_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except RejectedInputError as e:
        print(f"[error] {e}", file=sys.stderr)
        return EXIT_REJECTED
    except Exception as e:
        logger.exception("bench %s failed", args.command)
        print(f"[error] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
