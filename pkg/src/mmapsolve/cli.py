"""Command-line front end: ``mmapsolve {solve,table,noinflow,cond,ritz,verify}``.

Exit codes: 0 success, 2 usage error, 3 solver failure (``solve`` only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import sparse as sps
from .analysis import SLOPE_COLUMNS, conjecture_check, observed_orders, slope_table_csv
from .exceptions import MMAPError
from .experiments import (
    DEFAULT_EPS,
    DEFAULT_N,
    LARGE_N,
    MAX_N_WITHOUT_LARGE,
    ExperimentSpec,
    cell_dict,
    run_cell,
    run_table,
    table_csv,
)
from .grid import Case
from .schur import SchurVariant

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 2, 3


def _float_list(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {s!r}")


def _int_list(s: str) -> list[int]:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {s!r}")


def _common(p: argparse.ArgumentParser, schur_default="s5"):
    p.add_argument("--case", choices=[c.value for c in Case], default="aligned")
    p.add_argument("--schur", choices=[v.value for v in SchurVariant], default=schur_default)
    p.add_argument("--N", type=int, help="single mesh parameter")
    p.add_argument("--N-list", type=_int_list, dest="N_list")
    p.add_argument("--eps", type=float, help="single anisotropy parameter")
    p.add_argument("--eps-list", type=_float_list, dest="eps_list")
    p.add_argument("--beta", type=float, help="field-line curvature (default 0 aligned, 2 non-aligned)")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--maxit", type=int, default=100)
    p.add_argument("--no-inflow", action="store_true")
    p.add_argument("--output", type=Path)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--large", action="store_true", help="allow N > 128 and add N=256 to the default grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmapsolve", description="Block-preconditioned GMRES for the micro-macro anisotropic elliptic system.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one (N, eps) cell, JSON report")
    _common(p)
    p.add_argument("--history", type=Path, help="write the residual history as CSV")
    p.add_argument("--export-matrices", type=Path, dest="export_matrices", help="directory for Matrix Market dumps")
    p.set_defaults(format="json")

    p = sub.add_parser("table", help="iteration counts over the (N, eps) grid")
    _common(p)

    p = sub.add_parser("noinflow", help="table for the system without the inflow condition")
    _common(p)

    p = sub.add_parser("cond", help="condition number of the non-AP matrix and fitted slopes")
    _common(p, schur_default="s1")
    p.add_argument("--beta-list", type=_float_list, dest="beta_list")
    p.add_argument("--cond-tol", type=float, default=1e-4, dest="cond_tol")

    p = sub.add_parser("ritz", help="Ritz values of the preconditioned operator")
    _common(p)

    p = sub.add_parser("verify", help="refinement study against the manufactured solution")
    _common(p)
    return parser


class UsageError(Exception):
    pass


def _grids(args) -> tuple[list[int], list[float]]:
    if args.N is not None and args.N_list:
        raise UsageError("give --N or --N-list, not both")
    if args.eps is not None and args.eps_list:
        raise UsageError("give --eps or --eps-list, not both")
    Ns = [args.N] if args.N is not None else (args.N_list or list(DEFAULT_N) + (list(LARGE_N) if args.large else []))
    eps = [args.eps] if args.eps is not None else (args.eps_list or list(DEFAULT_EPS))
    if not args.large and any(N > MAX_N_WITHOUT_LARGE for N in Ns):
        raise UsageError(f"N > {MAX_N_WITHOUT_LARGE} needs --large")
    return Ns, eps


def _spec(args, Ns, eps, inflow=None) -> ExperimentSpec:
    beta = args.beta if args.beta is not None else (0.0 if args.case == "aligned" else 2.0)
    spec = ExperimentSpec(
        case=args.case, schur=args.schur, N_list=Ns, eps_list=eps, beta=beta, m=args.m,
        inflow=(not args.no_inflow) if inflow is None else inflow, tol=args.tol, maxit=args.maxit,
    )
    problems = spec.problems()
    if problems:
        raise UsageError("; ".join(problems))
    return spec


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _rows_json(rows, spec) -> str:
    doc = {"schema": SCHEMA, "spec": _spec_dict(spec), "cells": [cell_dict(r) for r in rows]}
    return json.dumps(doc, indent=2) + "\n"


def _spec_dict(spec: ExperimentSpec) -> dict:
    return {
        "case": spec.case.value, "schur": spec.schur.value, "N_list": list(spec.N_list),
        "eps_list": list(spec.eps_list), "beta": spec.beta, "m": spec.m, "inflow": spec.inflow,
        "tol": spec.tol, "maxit": spec.maxit,
    }


def cmd_solve(args) -> int:
    Ns, eps = _grids(args)
    if len(Ns) != 1 or len(eps) != 1:
        raise UsageError("solve takes a single --N and --eps")
    spec = _spec(args, Ns, eps)
    r = run_cell(spec, Ns[0], eps[0], keep=True)
    doc = {"schema": SCHEMA, "spec": _spec_dict(spec), **cell_dict(r)}
    if r.report is not None:
        doc["residual_history"] = [float(v) for v in r.report.residual_history]
    _emit(json.dumps(doc, indent=2) + "\n", args.output)

    if args.history is not None and r.report is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "relative_residual"])
        for k, v in enumerate(r.report.residual_history):
            w.writerow([k, repr(float(v))])
        args.history.write_text(buf.getvalue())

    if args.export_matrices is not None:
        out = args.export_matrices
        out.mkdir(parents=True, exist_ok=True)
        s = r.system
        for name, mat in (("A1", s.A1), ("A2", s.A2), ("A3", s.A3), ("B", s.B), ("F", s.F)):
            sps.write_mtx(out / f"{name}.mtx", mat)
        if r.schur_op is not None:
            sps.write_mtx(out / "S.mtx", r.schur_op.matrix)
    return EXIT_OK if r.converged else EXIT_SOLVER


def _table(args, inflow=None) -> int:
    Ns, eps = _grids(args)
    spec = _spec(args, Ns, eps, inflow)
    rows = run_table(spec)
    _emit(table_csv(rows) if args.format == "csv" else _rows_json(rows, spec), args.output)
    return EXIT_OK


def cmd_table(args) -> int:
    return _table(args)


def cmd_noinflow(args) -> int:
    return _table(args, inflow=False)


def cmd_cond(args) -> int:
    Ns = args.N_list or ([args.N] if args.N is not None else [16, 32, 64])
    eps = args.eps_list or ([args.eps] if args.eps is not None else [1.0, 1e-10])
    if args.beta_list:
        betas = args.beta_list
    else:
        betas = [args.beta if args.beta is not None else (0.0 if args.case == "aligned" else 2.0)]
    try:
        rows = conjecture_check(args.case, betas, eps, Ns, tol=args.cond_tol)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.format == "json":
        doc = {"schema": SCHEMA, "rows": [{c: getattr(r, c) for c in SLOPE_COLUMNS} | {"sweep": r.sweep} for r in rows]}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = slope_table_csv(rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_ritz(args) -> int:
    Ns, eps = _grids(args)
    spec = _spec(args, Ns, eps)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "schur", "N", "eps", "index", "real", "imag"])
    for N in Ns:
        for e in eps:
            r = run_cell(spec, N, e, ritz=True)
            vals = r.report.ritz if r.report is not None and r.report.ritz is not None else []
            for k, v in enumerate(vals):
                w.writerow([spec.case.value, spec.schur.value, N, e, k, repr(float(v.real)), repr(float(v.imag))])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    Ns, eps = _grids(args)
    if args.N is None and not args.N_list:
        Ns = list(DEFAULT_N)
    if args.eps is None and not args.eps_list:
        eps = [1.0, 1e-20]
    if len(Ns) < 2:
        raise UsageError("verify needs at least two mesh sizes")
    spec = _spec(args, Ns, eps)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "eps", "N", "h", "error_linf", "observed_order"])
    for e in eps:
        rows = [run_cell(spec, N, e) for N in Ns]
        hs = [1.0 / (N - 1) for N in Ns]
        errs = [r.error_linf for r in rows]
        orders = [""] + [repr(float(o)) for o in observed_orders(errs, hs)]
        for r, h, o in zip(rows, hs, orders):
            w.writerow([spec.case.value, e, r.N, repr(h), repr(float(r.error_linf)), o])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "table": cmd_table,
    "noinflow": cmd_noinflow,
    "cond": cmd_cond,
    "ritz": cmd_ritz,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MMAPError as exc:
        print(f"{parser.prog} {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
