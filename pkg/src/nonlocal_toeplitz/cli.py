"""Command line front end: ``solve``, ``study`` and ``oracle-check``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .driver import ConfigError, NumericalError, RunConfig, convergence_study, oracle_check, parse_number, run_solve
from .solver import BreakdownError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# flag -> RunConfig field
FLAGS = {
    "dim": "d", "domain_a": "a", "domain_b": "b", "h": "h", "s": "s", "lambda_": "lam", "truncation_T": "T",
    "coarsen_q": "q", "hmin": "h_min", "gauss_n": "gauss_n", "tol": "tol", "max_it": "max_it",
    "threads": "threads", "out": "out", "solver": "solver", "source": "source", "cache_dir": "cache_dir",
    "slices": "slices",
}


def _common(p):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--dim", type=int)
    p.add_argument("--domain-a", nargs="+", type=parse_number)
    p.add_argument("--domain-b", nargs="+", type=parse_number)
    p.add_argument("--h", nargs="+", help="grid size(s), e.g. 2^-9 (several for a study, descending)")
    p.add_argument("--s", type=parse_number, help="fraction s in (0, 1)")
    p.add_argument("--lambda", dest="lambda_", type=parse_number, help="half-width of the near box")
    p.add_argument("--truncation-T", type=parse_number)
    p.add_argument("--coarsen-q", type=parse_number)
    p.add_argument("--hmin", type=parse_number)
    p.add_argument("--gauss-n", type=int)
    p.add_argument("--tol", type=parse_number)
    p.add_argument("--max-it", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--solver", choices=["cg", "levinson"])
    p.add_argument("--source", help="'one', 'x0' or a numpy expression in x0, x1, ...")
    p.add_argument("--cache-dir", help="directory for cached first rows")
    p.add_argument("--slices", type=int, help="number of 3d slice files")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="nonlocal-toeplitz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("solve", "assemble and solve one problem"),
                        ("study", "convergence study over several grid sizes"),
                        ("oracle-check", "compare small assembled matrices with the independent oracle")):
        _common(sub.add_parser(name, help=help_))
    return parser


def config_from_args(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {field: getattr(args, flag) for flag, field in FLAGS.items() if getattr(args, flag, None) is not None}
    if "h" in changes:
        hs = [parse_number(v) for v in changes["h"]]
        changes["h"] = hs[0] if len(hs) == 1 else hs
    if "d" in changes and args.config is None:
        changes.setdefault("a", [0.0] * changes["d"])
        changes.setdefault("b", [1.0] * changes["d"])
    return cfg.replace(**changes)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "solve":
            if len(cfg.h_list) != 1:
                raise ConfigError("solve takes a single --h; use 'study' for several")
            res = run_solve(cfg)
            r = res.report
            print(f"dofs {r.dofs}  iterations {r.cg_iterations}  residual {r.final_residual:.2e}  "
                  f"assembly {r.timings['assembly']:.1f}s  solve {r.solve_time:.2f}s  -> {cfg.out}")
        elif args.command == "study":
            results = convergence_study(cfg)
            print(f"{'h':>12} {'dofs':>9} {'its':>6} {'energy error':>13} {'rate':>6}")
            for res in results:
                r = res.report
                err = "-" if r.energy_error is None else f"{r.energy_error:.3e}"
                rate = "-" if r.rate is None else f"{r.rate:.2f}"
                print(f"{r.h:12.4e} {r.dofs:9d} {r.cg_iterations:6d} {err:>13} {rate:>6}")
        else:
            dims = (cfg.d,) if args.dim is not None else (1, 2, 3)
            res = oracle_check(dims)
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "oracle_check.json").write_text(json.dumps(res, indent=2, sort_keys=True))
            for d, r in res.items():
                print(f"d={d} L={r['L']} max rel error {r['max_rel_error']:.2e} {'pass' if r['passed'] else 'FAIL'}")
            if not all(r["passed"] for r in res.values()):
                return EXIT_NUMERIC
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, BreakdownError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK
