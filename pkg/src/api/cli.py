#!/usr/bin/env python3
"""
Command line front end for the fast kernel matvec.

Usage:
    python cli.py matvec --dim 1 --n 10000 --nu 1.5 --nt 20 --nsigma 20 --m 400 [--out rows.csv]
    python cli.py ablate --axis N_sigma --values 4 8 12 16 20 24 28
    python cli.py solve --dim 2 --n 10000 --kernel sqexp --regime 1
    python cli.py phi --nu 1.5 --eps 1e-8
    python cli.py validate

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 resource error.
"""

import argparse
import logging
import sys

from pydantic import ValidationError

from calculations.benchmarks import RunConfig, run_ablation, run_matvec_bench, run_phi, run_solve_bench
from calculations.validation import run_validate
from helpers.config import settings
from helpers.csv_io import write_rows
from helpers.errors import NsMatvecError
from helpers.logs import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RESOURCE = 0, 1, 2, 3

# argparse destination -> RunConfig field
CONFIG_FIELDS = (
    "command", "dim", "n", "kernel", "nu", "field", "sigma_value", "weight", "data", "normalize",
    "nt", "nsigma", "m", "domega", "auto_eps", "eps", "nufft_tol", "strategy", "seed", "regime",
    "cg_tol", "max_iter", "axis", "values", "radii", "r_max", "oracle_cap", "threads", "out",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Fast non-stationary kernel matvec: benchmarks, ablations, solves and validation",
    )
    parser.add_argument("command", choices=["matvec", "ablate", "solve", "validate", "phi"])

    problem = parser.add_argument_group("problem")
    problem.add_argument("--dim", type=int, default=1, help="Spatial dimension (1, 2 or 3)")
    problem.add_argument("--n", type=int, default=1000, help="Number of generated points")
    problem.add_argument("--kernel", choices=["matern", "sqexp"], default="matern")
    problem.add_argument("--nu", type=float, default=1.5, help="Matern smoothness")
    problem.add_argument("--field", choices=["sigma_ref", "constant", "csv"], default="sigma_ref",
                         help="Length-scale field")
    problem.add_argument("--sigma-value", type=float, help="Length scale for --field constant")
    problem.add_argument("--weight", type=float, default=1.0, help="Constant weight w(x)")
    problem.add_argument("--data", help="CSV with columns x1..xd[,y][,sigma]")
    problem.add_argument("--normalize", action="store_true",
                         help="Map --data points affinely into [-1, 1]^d")
    problem.add_argument("--seed", type=int, default=0, help="64-bit seed for data and vectors")

    approx = parser.add_argument_group("approximation")
    approx.add_argument("--nt", type=int, help="Quadrature nodes N_t")
    approx.add_argument("--nsigma", type=int, help="Chebyshev degree N_sigma")
    approx.add_argument("--m", type=int, help="Fourier grid half-width M")
    approx.add_argument("--domega", type=float, help="Fourier grid spacing")
    approx.add_argument("--auto-eps", type=float, help="Select all parameters for this tolerance")
    approx.add_argument("--eps", type=float, default=1e-6,
                        help="Tolerance used for the t-range and grid spacing of explicit parameters")
    approx.add_argument("--nufft-tol", type=float, help="NUFFT tolerance (default eps/10)")
    approx.add_argument("--strategy", choices=["coupled", "streaming"], help="Force the step-3 strategy")

    runs = parser.add_argument_group("runs")
    runs.add_argument("--regime", type=int, choices=[1, 2], help="Solve regime")
    runs.add_argument("--cg-tol", type=float, default=1e-6)
    runs.add_argument("--max-iter", type=int, default=1000)
    runs.add_argument("--axis", choices=["N_t", "N_sigma", "M", "N"], help="Ablation axis")
    runs.add_argument("--values", type=float, nargs="+", default=[], help="Ablation values, ascending")
    runs.add_argument("--radii", type=int, default=50, help="Radii in the phi table")
    runs.add_argument("--r-max", type=float, default=5.0, help="Largest radius in the phi table")

    output = parser.add_argument_group("output")
    output.add_argument("--out", help="Output CSV (default stdout)")
    output.add_argument("--threads", type=int, help="Cap on worker threads")
    output.add_argument("--oracle-cap", type=int, help="Largest N for the dense oracle")
    output.add_argument("--log-level", default=settings.log_level)
    output.add_argument("--log-file", default=settings.log_file)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(**{name: getattr(args, name) for name in CONFIG_FIELDS})


def _print_validation(results):
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status:4}  {result.name:28} {result.seconds:8.2f}s  {result.detail}", file=sys.stderr)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed} passed, {failed} failed", file=sys.stderr)


def run(cfg: RunConfig) -> int:
    if cfg.command == "validate":
        results = run_validate()
        _print_validation(results)
        write_rows(results, cfg.out)
        return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION

    if cfg.command == "matvec":
        rows = run_matvec_bench(cfg)
    elif cfg.command == "ablate":
        rows = run_ablation(cfg)
    elif cfg.command == "solve":
        rows = run_solve_bench(cfg)
    else:
        rows = run_phi(cfg)
    write_rows(rows, cfg.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    setup_logging(args.log_level, args.log_file)

    try:
        cfg = config_from_args(args)
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"]) or "config"
            logger.error(f"{location}: {error['msg']}")
        return EXIT_USAGE

    try:
        return run(cfg)
    except NsMatvecError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except MemoryError as e:
        logger.error(f"out of memory: {e}")
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
