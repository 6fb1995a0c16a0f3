"""Command line interface: ``python -m ma3d <command>``.

Exit codes: 0 success, 1 solver non-convergence, 2 bad arguments.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench
from .grid import dump_csv
from .lattice import (
    Stencil,
    from_upper_triangle,
    make_kappa_stencil,
    make_table1_stencil,
    strict_voronoi_vectors,
)
from .newton import NewtonConfig
from .polytope import polytope_off, symmetric_polytope

FULL_SCALE = [10, 20, 30, 40, 50]


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _scheme_spec(scheme, stencil):
    if scheme == "fd":
        return "fd"
    return f"{scheme}:{stencil or 'small'}"


def _case_params(args):
    params = {}
    if getattr(args, "matrix", None):
        params["M"] = from_upper_triangle(args.matrix)
    elif getattr(args, "seed", None) is not None:
        params["seed"] = args.seed
    return params


def cmd_solve(args):
    stencil = Stencil.load(args.stencil_file) if args.stencil_file else None
    if stencil is not None and args.scheme != "proposed":
        raise UsageError("--stencil-file only applies to the proposed scheme")
    ncfg = NewtonConfig(tol_residual=args.tol, max_iters=args.max_iters, verbose=args.verbose)
    spec = _scheme_spec(args.scheme, args.stencil)
    rec, u, report, sch = bench.run_case(args.case, spec, args.n, _case_params(args), ncfg, stencil)
    tc = bench.make_test_case(args.case, _case_params(args))
    out = {"record": bench.asdict(rec), "newton": report.to_dict() if report else None,
           "newton_config": bench.asdict(ncfg)}
    if u is not None and rec.converged:
        grid = sch.grid
        ni = grid.n_interior
        y = sch.target(tc.density, tc.boundary)
        out["residual_log"] = float(np.abs(sch.evaluate(u) - y).max())
        out["residual_linear"] = float(np.abs(sch.operator(u) - tc.density(grid.points[:ni])).max())
    if args.dump and u is not None:
        dump_csv(sch.grid, u, args.dump)
    if args.report_json:
        with open(args.report_json, "w") as fh:
            json.dump(out, fh, indent=2)
    print(f"case={rec.case} scheme={rec.scheme} stencil={rec.stencil} n={rec.n} "
          f"converged={rec.converged} iters={rec.iters} linf_error={rec.linf_error:.6e} "
          f"seconds={rec.seconds:.2f}")
    if "residual_log" in out:
        print(f"residual (log) {out['residual_log']:.3e}  residual (linear) {out['residual_linear']:.3e}")
    return 0 if rec.converged else 1


def cmd_table(args):
    n_list = FULL_SCALE if args.full_scale else args.n_list
    ncfg = NewtonConfig(tol_residual=args.tol)
    params = {"seed": args.seed} if args.seed is not None else None
    records = []
    for case in args.cases.split(","):
        bench.make_test_case(case, params)  # validate before running anything
        records += bench.convergence_table(case, args.schemes.split(","), n_list,
                                           params if case == "quadratic" else None, ncfg)
    if args.out:
        bench.write_table_csv(records, args.out)
    for r in records:
        print(f"{r.case:14s} {r.scheme:9s} {r.stencil:7s} n={r.n:3d} err={r.linf_error:.3e} "
              f"iters={r.iters:3d} {r.seconds:7.2f}s converged={r.converged}")
    return 0


def cmd_sphere(args):
    rows = bench.consistency_sphere_map(args.family, args.scheme, args.samples)
    if args.out:
        bench.write_sphere_csv(rows, args.out)
    err = rows[:, 3]
    print(f"{args.family} {args.scheme}: samples={len(rows)} "
          f"max={err.max():.4f} mean={err.mean():.4f} zero_fraction={(err < 1e-9).mean():.3f}")
    return 0


def cmd_voronoi(args):
    M = from_upper_triangle(args.matrix)
    vecs = strict_voronoi_vectors(M)
    normals = vecs @ M
    offsets = np.einsum("ij,ij->i", normals, vecs)
    vol = symmetric_polytope(normals, offsets).volume
    for e in vecs:
        print("+-(" + ", ".join(str(int(x)) for x in e) + ")")
    print(f"strict Voronoi vectors: {len(vecs)} (up to sign)")
    print(f"volume {vol:.12g}")
    if args.off:
        with open(args.off, "w") as fh:
            fh.write(polytope_off(np.concatenate([2 * normals, -2 * normals]),
                                  np.concatenate([offsets, offsets])))
    return 0


def cmd_stencil(args):
    if args.kappa is not None:
        V = make_kappa_stencil(args.kappa, args.dim)
    else:
        V = make_table1_stencil(args.which, args.dim)
    if args.out:
        V.save(args.out)
    print(V.to_text(), end="")
    print(f"{len(V)} directions")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ma3d", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one test case")
    s.add_argument("--case", default="smoothed_cone", choices=["quadratic", "smoothed_cone", "singular"])
    s.add_argument("--scheme", default="proposed", choices=["proposed", "ws", "fd"])
    s.add_argument("--stencil", default=None, help="small|large (proposed), small|medium|large (ws)")
    s.add_argument("--stencil-file", default=None)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--matrix", type=float, nargs=6, default=None,
                   help="quadratic case: upper triangle m11 m12 m13 m22 m23 m33")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--dump", default=None, help="write the solution as CSV")
    s.add_argument("--report-json", default=None)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("table", help="convergence table")
    t.add_argument("--cases", default="quadratic,smoothed_cone,singular")
    t.add_argument("--schemes", default="proposed:small,proposed:large,ws:small,fd")
    t.add_argument("--n-list", type=_int_list, default=[8, 12, 16, 20])
    t.add_argument("--full-scale", action="store_true", help=f"use n = {FULL_SCALE} (slow)")
    t.add_argument("--tol", type=float, default=1e-8)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_table)

    h = sub.add_parser("sphere", help="consistency error over a sphere of anisotropic matrices")
    h.add_argument("--family", default="aniso_plus", choices=["aniso_plus", "aniso_minus", "rotated"])
    h.add_argument("--scheme", default="proposed:small")
    h.add_argument("--samples", type=int, default=1000)
    h.add_argument("--out", default=None)
    h.set_defaults(func=cmd_sphere)

    v = sub.add_parser("voronoi", help="strict Voronoi vectors of a 3x3 SPD matrix")
    v.add_argument("--matrix", type=float, nargs=6, required=True,
                   help="upper triangle m11 m12 m13 m22 m23 m33")
    v.add_argument("--off", default=None, help="write the Voronoi cell as OFF")
    v.set_defaults(func=cmd_voronoi)

    c = sub.add_parser("stencil", help="print the small, large or a kappa stencil")
    c.add_argument("--which", default="small", choices=["small", "large"])
    c.add_argument("--kappa", type=float, default=None)
    c.add_argument("--dim", type=int, default=3)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_stencil)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
