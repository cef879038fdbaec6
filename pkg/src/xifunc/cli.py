"""Command-line front end: evaluation tables, oracle runs, verification suites, operator spectra.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error,
3 numerical non-convergence.  Output is deterministic for a fixed command
line: floats are written with ``repr`` and JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels, oracle, verify, xi1, xi2
from .errors import (ConvergenceError, DomainError, ParameterError, SymmetryError,
                     ValidationError, XiError)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNCONVERGED = 0, 1, 2, 3
OUTPUT_DIR_ENV = "XIFUNC_OUTPUT_DIR"
GRID_MAX = 0.999
TOL_RANGE = (1e-14, 1e-2)


class UsageError(XiError):
    """Invalid command-line configuration."""


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    converged: bool = True


# ---------------------------------------------------------------------------
# argument parsing helpers


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_grid(args) -> list[float]:
    """x values from --x (comma list) or --start/--stop/--step (stop inclusive)."""
    if args.x is not None:
        try:
            xs = [float(t) for t in args.x.split(",") if t.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --x list {args.x!r}") from exc
    else:
        if args.step is None or args.step <= 0:
            raise UsageError("grid step must be positive")
        if args.stop < args.start:
            raise UsageError("grid stop must not be below start")
        n = int(np.floor((args.stop - args.start) / args.step + 1e-9)) + 1
        xs = [round(args.start + i * args.step, 12) for i in range(n)]
    if not xs:
        raise UsageError("empty x grid")
    for x in xs:
        if not 0.0 <= x <= GRID_MAX:
            raise UsageError(f"grid value {x!r} outside [0, {GRID_MAX}]")
    return xs


def parse_orders(rank: int, specs: list[str]) -> list[tuple[int, ...]]:
    """Rank 1: each --k is a comma list of orders.  Rank 2: each --k is one pair 'k1,k2'
    (several pairs may be joined with ';')."""
    out = []
    try:
        for spec in specs:
            if rank == 1:
                out += [(int(t),) for t in spec.split(",") if t.strip()]
            else:
                for pair in spec.split(";"):
                    parts = [int(t) for t in pair.split(",") if t.strip()]
                    if len(parts) != 2:
                        raise UsageError(f"rank-2 order needs two entries, got {pair!r}")
                    out.append(tuple(parts))
    except ValueError as exc:
        raise UsageError(f"bad order list {specs!r}") from exc
    if not out:
        raise UsageError("no orders given")
    if any(v < 0 for o in out for v in o):
        raise UsageError("orders must be non-negative")
    return out


def check_tol(tol: float) -> float:
    lo, hi = TOL_RANGE
    if not lo <= tol <= hi:
        raise UsageError(f"tolerance {tol!r} outside [{lo}, {hi}]")
    return tol


def quad_spec(args) -> oracle.QuadratureSpec:
    base = oracle.DEFAULT_SPEC
    return oracle.QuadratureSpec(
        nodes_per_panel=args.nodes_per_panel or base.nodes_per_panel,
        initial_panels=args.initial_panels or base.initial_panels,
        tol=args.quad_tol or base.tol,
        max_depth=base.max_depth if args.max_depth is None else args.max_depth)


def read_field(args) -> kernels.RadialField:
    if args.field_file:
        return kernels.RadialField.from_csv(args.field_file)
    return kernels.RadialField.constant(args.field_constant)


def _order_label(order: tuple[int, ...]) -> str:
    return ",".join(str(v) for v in order)


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args) -> Table:
    tol = check_tol(args.tol)
    xs = parse_grid(args)
    orders = parse_orders(args.rank, args.k)
    t = Table(["order", "x", "value", "abs_error", "terms", "converged"])
    for order in orders:
        for x in xs:
            if args.rank == 1:
                r = xi1.xi1_series(order[0], x, tol, norm=args.norm)
            else:
                r = xi2.xi2_series(order, x, tol, norm=args.norm, dps=args.dps)
            t.rows.append([_order_label(order), x, float(r.value), float(r.abs_error),
                           int(r.terms_used), bool(r.converged)])
            t.converged &= bool(r.converged)
    return t


def cmd_oracle(args) -> Table:
    spec = quad_spec(args)
    kind = args.kind
    if kind == "xi":
        xs = parse_grid(args)
        t = Table(["order", "x", "value", "abs_error", "converged"])
        for order in parse_orders(args.rank, args.k):
            o = oracle.XiOrder.of(*order)
            for x in xs:
                r = (oracle.xi_reference(o, x, spec) if args.reference
                     else oracle.xi_direct(o, x, spec))
                t.rows.append([_order_label(order), x, float(r.value), float(r.abs_error),
                               bool(r.converged)])
                t.converged &= bool(r.converged)
        return t
    if kind == "z":
        t = Table(["order", "r", "rho", "value", "abs_error", "converged"])
        for order in parse_orders(args.rank, args.k):
            r = oracle.z_direct(oracle.XiOrder.of(*order), args.r, args.rho, spec)
            t.rows.append([_order_label(order), args.r, args.rho, float(r.value),
                           float(r.abs_error), bool(r.converged)])
            t.converged &= bool(r.converged)
        return t
    if kind == "a":
        r = oracle.a_direct(args.l, args.k1, args.k2, spec)
        t = Table(["l", "k1", "k2", "value", "abs_error", "converged"],
                  [[args.l, args.k1, args.k2, float(r.value), float(r.abs_error),
                    bool(r.converged)]], bool(r.converged))
        return t
    if kind == "psi":
        r = oracle.psi_cyl(oracle.CylindricalParams(args.k, args.zeta, args.x), spec)
        return Table(["k", "zeta", "x", "value", "abs_error", "converged"],
                     [[args.k, args.zeta, args.x, float(r.value), float(r.abs_error),
                       bool(r.converged)]], bool(r.converged))
    raise UsageError(f"unknown oracle {kind!r}")


def cmd_verify(args) -> verify.Report:
    options = {"seed": args.seed, "dps": args.dps, "rank": args.rank,
               "inject_unbalanced": args.inject_unbalanced}
    return verify.run_suite(args.suite, **options)


def _domain(args) -> kernels.KernelDomain:
    return kernels.KernelDomain(args.rank, args.r_inner, args.r_outer)


def _kernel_order(args):
    orders = parse_orders(args.rank, args.k)
    return [o[0] if args.rank == 1 else o for o in orders]


def _assemble(args, k, n):
    if n < 8:
        raise UsageError("mesh size must be >= 8")
    spec = kernels.DIAGONAL_SPEC
    if args.quad_tol:
        spec = oracle.QuadratureSpec(spec.nodes_per_panel, spec.initial_panels,
                                     args.quad_tol, spec.max_depth)
    return kernels.assemble_operator(_domain(args), k, read_field(args), n, args.norm,
                                     prefactor=args.prefactor, spec=spec)


def cmd_kernel(args) -> Table:
    orders = _kernel_order(args)
    if len(orders) != 1:
        raise UsageError("kernel export takes a single order")
    m = _assemble(args, orders[0], args.nodes)
    rows = m.to_csv_rows()
    t = Table(rows[0], converged=bool(m.meta["converged"]))
    for i in range(m.n_nodes):
        t.rows.append([float(m.nodes[i]), float(m.weights[i]), float(m.phi[i]),
                       *(float(v) for v in m.matrix[i])])
    return t


def cmd_spectrum(args) -> dict:
    sizes = sorted(set(args.nodes_list or [args.nodes]))
    pairs = []
    for p in args.refine or []:
        try:
            a, b = (int(v) for v in p.split(","))
        except ValueError as exc:
            raise UsageError(f"refinement pair must be 'coarse,fine', got {p!r}") from exc
        pairs.append((a, b))
        sizes = sorted(set(sizes) | {a, b})
    records, refinement = [], []
    converged = True
    for k in _kernel_order(args):
        eig = {}
        for n in sizes:
            m = _assemble(args, k, n)
            sym = kernels.selfadjointness_check(m)
            vals = kernels.spectrum(m)
            eig[n] = vals
            converged &= bool(m.meta["converged"])
            records.append({
                "n_nodes": n, "k": _klist(k), "eigenvalues": [float(v) for v in vals],
                "symmetry_residual": sym, "null_residual": kernels.null_residual(m),
                "min_abs_eigenvalue": float(np.min(np.abs(vals))),
                "converged": bool(m.meta["converged"])})
        for a, b in pairs:
            refinement.append({"k": _klist(k), "coarse": a, "fine": b,
                               "drift": kernels.spectral_drift(eig[a], eig[b])})
    return {"schema_version": verify.SCHEMA_VERSION, "version": verify.tool_version(),
            "rank": args.rank, "prefactor": args.prefactor, "field": read_field(args).label,
            "records": records, "refinement": refinement, "converged": converged}


def _klist(k) -> list:
    return [int(v) for v in k] if isinstance(k, tuple) else [int(k)]


# ---------------------------------------------------------------------------
# output


def render_table(t: Table, fmt: str) -> str:
    if fmt == "json":
        data = {"columns": t.columns, "rows": [dict(zip(t.columns, r)) for r in t.rows],
                "converged": t.converged, "schema_version": verify.SCHEMA_VERSION}
        return json.dumps(data, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.columns)
    for r in t.rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def render_spectrum(data: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "n_nodes", "index", "eigenvalue"])
    for rec in data["records"]:
        for i, v in enumerate(rec["eigenvalues"]):
            w.writerow([_order_label(tuple(rec["k"])), rec["n_nodes"], i, repr(v)])
    return buf.getvalue()


def output_path(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def emit(text: str, path: str | None) -> None:
    p = output_path(path)
    if p is None:
        sys.stdout.write(text)
        return
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


# ---------------------------------------------------------------------------
# parser


def _add_common(p, *, grid=False, quad=False, norm=True):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help=f"output file; relative paths go under ${OUTPUT_DIR_ENV} if set")
    p.add_argument("--tol", type=float, default=1e-14, help="series tolerance in [1e-14, 1e-2]")
    if norm:
        p.add_argument("--norm", choices=xi1.MODES, default=None,
                       help="normalization mode (default: paper for eval, calibrated for kernels)")
    if grid:
        p.add_argument("--x", help="comma-separated x values")
        p.add_argument("--start", type=float, default=0.1)
        p.add_argument("--stop", type=float, default=0.9)
        p.add_argument("--step", type=float, default=0.1)
    if quad:
        p.add_argument("--nodes-per-panel", type=int)
        p.add_argument("--initial-panels", type=int)
        p.add_argument("--quad-tol", type=float)
        p.add_argument("--max-depth", type=int)


def _add_kernel(p):
    p.add_argument("--rank", type=int, choices=(1, 2), default=1)
    p.add_argument("--k", action="append", default=None, help="order (rank 2: 'k1,k2')")
    p.add_argument("--r-inner", type=float, default=0.0)
    p.add_argument("--r-outer", type=float, default=1.0)
    p.add_argument("--prefactor", choices=kernels.PREFACTORS, default="decomposition")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--field-constant", type=float, default=1.0)
    g.add_argument("--field-file", help="two-column CSV (r, phi)")
    p.add_argument("--quad-tol", type=float, help="diagonal-integral quadrature tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xifunc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate Xi-functions from their series")
    p.add_argument("--rank", type=int, choices=(1, 2), required=True)
    p.add_argument("--k", action="append", required=True,
                   help="rank 1: comma list of orders; rank 2: 'k1,k2' (repeat or join with ';')")
    p.add_argument("--dps", type=int, help="mpmath precision for the rank-2 inner series")
    _add_common(p, grid=True)

    p = sub.add_parser("oracle", help="run the quadrature oracles")
    osub = p.add_subparsers(dest="kind", required=True)
    q = osub.add_parser("xi", help="Xi by direct angular quadrature")
    q.add_argument("--rank", type=int, choices=(1, 2), required=True)
    q.add_argument("--k", action="append", required=True)
    q.add_argument("--reference", action="store_true", help="use the extended-precision reference")
    _add_common(q, grid=True, quad=True, norm=False)
    q = osub.add_parser("z", help="kernel Z by direct angular quadrature")
    q.add_argument("--rank", type=int, choices=(1, 2), required=True)
    q.add_argument("--k", action="append", required=True)
    q.add_argument("--r", type=float, required=True)
    q.add_argument("--rho", type=float, required=True)
    _add_common(q, quad=True, norm=False)
    q = osub.add_parser("a", help="double cosine moment A_l(k1, k2)")
    q.add_argument("--l", type=int, required=True)
    q.add_argument("--k1", type=int, required=True)
    q.add_argument("--k2", type=int, required=True)
    _add_common(q, quad=True, norm=False)
    q = osub.add_parser("psi", help="cylindrical kernel integral")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--zeta", type=float, required=True)
    q.add_argument("--x", type=float, required=True)
    _add_common(q, quad=True, norm=False)

    p = sub.add_parser("verify", help="run an identity verification suite (JSON report)")
    p.add_argument("suite", choices=tuple(verify.SUITES))
    p.add_argument("--seed", type=int, default=verify.DEFAULT_SEED)
    p.add_argument("--rank", type=int, choices=(1, 2), default=1, help="calibration rank")
    p.add_argument("--dps", type=int, help="mpmath precision for series-based suites")
    p.add_argument("--inject-unbalanced", action="store_true",
                   help="whipple: add a deliberately unbalanced case")
    p.add_argument("--output")

    p = sub.add_parser("kernel", help="assemble a partial operator and export the matrix")
    _add_kernel(p)
    p.add_argument("--nodes", type=int, default=64)
    _add_common(p)
    p.set_defaults(quad_tol=None)

    p = sub.add_parser("spectrum", help="eigenvalues of partial operators")
    _add_kernel(p)
    p.add_argument("--nodes", type=int, default=64)
    p.add_argument("--nodes-list", type=int, nargs="+", help="several mesh sizes")
    p.add_argument("--refine", action="append", help="refinement pair 'coarse,fine'")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--output")
    p.add_argument("--norm", choices=xi1.MODES, default=None)
    return ap


def _run(args) -> int:
    if args.command == "verify":
        rep = cmd_verify(args)
        emit(json.dumps(rep.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n", args.output)
        if not rep.converged:
            return EXIT_UNCONVERGED
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.command == "spectrum":
        if args.k is None:
            args.k = ["0" if args.rank == 1 else "0,0"]
        data = cmd_spectrum(args)
        emit(render_spectrum(data, args.format), args.output)
        return EXIT_OK if data["converged"] else EXIT_UNCONVERGED
    if args.command == "kernel":
        if args.k is None:
            args.k = ["0" if args.rank == 1 else "0,0"]
        check_tol(args.tol)
        t = cmd_kernel(args)
    elif args.command == "eval":
        t = cmd_eval(args)
    else:
        t = cmd_oracle(args)
    emit(render_table(t, args.format), args.output)
    return EXIT_OK if t.converged else EXIT_UNCONVERGED


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (UsageError, ParameterError, DomainError, ValidationError) as exc:
        print(f"xifunc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"xifunc: not converged: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except SymmetryError as exc:
        print(f"xifunc: verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
