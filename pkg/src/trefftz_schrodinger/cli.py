"""Command-line driver: ``trefftz-schrodinger {solve,convergence,taylor-check,condition}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .harness import (
    ConfigError,
    fmt,
    make_config,
    read_config_file,
    run_condition,
    run_convergence,
    run_solve,
)
from .problems import BENCHMARKS
from .timestepper import SingularMatrixError, SolverAbort

log = logging.getLogger("trefftz_schrodinger")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _run_options(parser):
    # defaults stay None so that config-file values survive unless a flag is given
    parser.add_argument("--config", help="flat key = value file; flags override it")
    parser.add_argument("--benchmark", choices=BENCHMARKS)
    parser.add_argument("--v-star", type=float, help="square-well depth V_* (default 20)")
    parser.add_argument("--p", type=_int_list, help="comma-separated degrees, e.g. 1,2,3")
    parser.add_argument("--divisions", type=_int_list,
                        help="cells per axis for each mesh level, e.g. 20,40,60,80")
    parser.add_argument("--ht-ratio", type=float, help="h_t = ratio * h_x (rounded to whole slabs)")
    parser.add_argument("--k-mode", choices=("equispaced", "tuned"))
    parser.add_argument("--k-star", type=float, help="wavenumber for --k-mode tuned")
    parser.add_argument("--quad", type=int, help="quadrature nodes per axis (overrides default)")
    parser.add_argument("--alpha-scale", type=float, help="multiplier of alpha = 1/h_Fx")
    parser.add_argument("--beta-scale", type=float, help="multiplier of beta = h_Fx")
    parser.add_argument("--out", help="output directory (default ./results)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-figures", dest="figures", action="store_const", const=False,
                        help="write CSV only")
    parser.add_argument("--no-kappa", dest="kappa", action="store_const", const=False,
                        help="skip condition numbers in convergence runs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trefftz-schrodinger",
        description="Space-time Trefftz DG for i psi_t + Lap psi - V psi = 0.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="one run; samples psi_hp on a uniform grid")
    _run_options(p_solve)
    p_solve.add_argument("--sample-points", type=int, help="grid points per axis (1D)")

    p_conv = sub.add_parser("convergence", help="mesh-family study with CSV error table")
    _run_options(p_conv)

    p_cond = sub.add_parser("condition", help="2-condition number of the slab matrix")
    _run_options(p_cond)

    p_tay = sub.add_parser("taylor-check", help="Taylor-matching rank and residual checks")
    p_tay.add_argument("--d", type=int, choices=(1, 2), default=1)
    p_tay.add_argument("--p", type=_int_list, default=(1, 2, 3))
    p_tay.add_argument("--v-star", type=float, default=20.0)
    p_tay.add_argument("--seed", type=int, default=0)
    p_tay.add_argument("--out", help="also write the table to OUT/taylor.csv")
    return parser


_RUN_KEYS = ("benchmark", "v_star", "p", "divisions", "ht_ratio", "k_mode", "k_star", "quad",
             "alpha_scale", "beta_scale", "out", "seed", "figures", "kappa", "sample_points")


def config_from_args(args):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in _RUN_KEYS}
    return make_config(file_values, overrides)


def _taylor(args):
    from pathlib import Path

    from .taylor import taylor_check

    ok = True
    table = []
    for p in args.p:
        check = taylor_check(args.d, p, args.seed, args.v_star)
        ok &= check.passed
        extra = "" if args.d == 1 else f"  sigma_min(S) = {check.s_sigma_min:.3e}"
        print(f"d={args.d} p={p}: rank {check.rank.rank}/{check.rank.expected}  "
              f"sigma_min(M) = {check.rank.sigma_min:.3e}{extra}  "
              f"{'PASS' if check.passed else 'FAIL'}")
        for row in check.rows:
            print(f"    {row.target:<32} recurrence {row.recurrence:.2e}  "
                  f"match residual {row.residual:.2e}")
            table.append((args.d, p, check.rank.rank, check.rank.expected, check.rank.sigma_min,
                          check.s_sigma_min, row.target, row.recurrence, row.residual))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "taylor.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("d", "p", "rank", "expected", "sigma_min_M", "sigma_min_S",
                             "target", "recurrence", "residual"))
            writer.writerows([[fmt(v) for v in row] for row in table])
    return 0 if ok else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "taylor-check":
        return _taylor(args)
    try:
        config = config_from_args(args)
        if args.command == "solve":
            record, _ = run_solve(config)
            print(f"{record.benchmark} p={record.p} divisions={record.divisions}: "
                  f"dg_err={record.dg_err:.6e} l2T_err={record.l2T_err:.6e} "
                  f"e_loss={record.e_loss:.6e}")
        elif args.command == "convergence":
            report = run_convergence(config)
            for (p, mode), slopes in sorted(report.rates.items()):
                text = "  ".join(f"{k} {v:.3f}" for k, v in slopes.items())
                print(f"p={p} ({mode}): {text}")
        elif args.command == "condition":
            out = run_condition(config)
            for p, slope in sorted(out.slopes.items()):
                print(f"p={p}: kappa_2 slope {slope:.3f}")
        print(f"output written to {config.out}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverAbort, SingularMatrixError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
