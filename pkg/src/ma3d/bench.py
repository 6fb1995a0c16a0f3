"""Synthetic test cases, error metrics, consistency maps and convergence tables."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from .grid import unit_cube
from .newton import NewtonConfig, SolverError, solve
from .operators import DomainError, make_scheme


@dataclass
class TestCase:
    """Convex ``U`` on the unit cube with ``rho = det(hess U)`` and ``sigma = U``."""

    __test__ = False  # not a pytest class

    name: str
    exact: Callable
    density: Callable
    params: dict = field(default_factory=dict)

    def boundary(self, p):
        return self.exact(p)


def random_spd(rng, kappa, exact=False, d=3):
    """Random SPD matrix ``Q diag(lam) Q^T`` with ``sqrt(cond) <= kappa``.

    Eigenvalues are log-uniform in ``[1, kappa^2]``; with ``exact`` the two
    extreme ones are pinned so that ``sqrt(cond) == kappa``.
    """
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    lam = np.exp(rng.uniform(0, 2 * math.log(kappa), size=d))
    if exact:
        lam[0], lam[-1] = 1.0, kappa**2
    return (Q * lam) @ Q.T


def make_test_case(name: str, params: dict | None = None) -> TestCase:
    """``'quadratic'`` (params ``M`` or ``kappa``/``seed``), ``'smoothed_cone'`` or ``'singular'``."""
    params = dict(params or {})
    if name == "quadratic":
        if "M" in params:
            M = np.asarray(params["M"], dtype=float)
        else:
            rng = np.random.default_rng(params.get("seed", 0))
            M = random_spd(rng, params.get("kappa", 8.5), exact=True)
        if M.shape != (3, 3) or np.linalg.eigvalsh(M)[0] <= 0:
            raise ValueError("quadratic test case needs a 3x3 SPD matrix")
        det = float(np.linalg.det(M))
        params["M"] = M
        return TestCase(
            name,
            lambda p: 0.5 * np.einsum("ij,jk,ik->i", p, M, p),
            lambda p: np.full(len(p), det),
            params,
        )
    if name == "smoothed_cone":
        delta = float(params.setdefault("delta", 0.1))
        x0 = np.asarray(params.setdefault("x0", (0.5, 0.5, 0.5)), dtype=float)
        if delta <= 0:
            raise ValueError("delta must be positive")
        return TestCase(
            name,
            lambda p: np.sqrt(delta**2 + ((p - x0) ** 2).sum(-1)),
            lambda p: delta**2 / (delta**2 + ((p - x0) ** 2).sum(-1)) ** 2.5,
            params,
        )
    if name == "singular":
        return TestCase(
            name,
            lambda p: -np.sqrt(3 - (p**2).sum(-1)),
            lambda p: 3 / (3 - (p**2).sum(-1)) ** 2.5,
            params,
        )
    raise ValueError(f"unknown test case {name!r}")


def linf_error(u, tc: TestCase, grid) -> float:
    """Max over interior points of ``|u - U|``."""
    ni = grid.n_interior
    return float(np.abs(np.asarray(u)[:ni] - tc.exact(grid.points[:ni])).max())


def fibonacci_sphere(samples: int) -> np.ndarray:
    i = np.arange(samples) + 0.5
    z = 1 - 2 * i / samples
    r = np.sqrt(1 - z * z)
    phi = math.pi * (3 - math.sqrt(5)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def family_matrix(family: str, v) -> np.ndarray:
    """Anisotropic test matrix M(v) along the unit vector v."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    P = np.outer(v, v)
    if family == "aniso_plus":
        return np.eye(3) + (36.0 - 1) * P
    if family == "aniso_minus":
        return np.eye(3) + (1 / 36.0 - 1) * P
    if family == "rotated":
        R = 2 * P - np.eye(3)  # rotation of angle pi about v
        return R @ np.diag([6.0, 1.0, 1 / 6.0]) @ R.T
    raise ValueError(f"unknown family {family!r}")


def consistency_sphere_map(family: str, scheme: str, resolution: int = 1000, n: int = 8,
                           directions=None):
    """Relative consistency error ``(D u_M - det M) / D u_M`` for M = M(v), v on the sphere.

    The operator is evaluated on the sampled quadratic at the centre of an
    ``n^3`` cube grid.  ``directions`` overrides the Fibonacci sample of
    ``resolution`` points.  Returns an array of rows ``(vx, vy, vz, rel_error)``.
    """
    sch = make_scheme(scheme, unit_cube(), n)
    grid = sch.grid
    centre = grid.index_of((n // 2,) * 3)
    if centre not in grid.deep_interior():
        raise ValueError(f"n = {n} is too small for the stencil of {scheme!r}")
    if directions is None:
        V = fibonacci_sphere(resolution)
    else:
        V = np.atleast_2d(np.asarray(directions, dtype=float))
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
    rows = np.empty((len(V), 4))
    for r, v in enumerate(V):
        M = family_matrix(family, v)
        u = grid.sample(lambda p: 0.5 * np.einsum("ij,jk,ik->i", p, M, p))
        val = sch.operator(u, centre)
        rows[r, :3] = v
        rows[r, 3] = (val - np.linalg.det(M)) / val
    return rows


def write_sphere_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vx", "vy", "vz", "rel_error"])
        w.writerows(rows.tolist())


@dataclass
class RunRecord:
    case: str
    scheme: str
    stencil: str
    n: int
    linf_error: float
    iters: int
    seconds: float
    converged: bool


def run_case(case: str, scheme: str, n: int, params: dict | None = None,
             ncfg: NewtonConfig | None = None, stencil=None):
    """One solve; returns ``(RunRecord, u, report, scheme_obj)``, never raises on divergence."""
    tc = make_test_case(case, params)
    sch = make_scheme(scheme, unit_cube(), n, stencil=stencil)
    kind, _, arg = scheme.partition(":")
    label = stencil.label if stencil is not None else (arg or ("small" if kind != "fd" else "-"))
    t0 = time.perf_counter()
    try:
        u, report = solve(tc.density, tc.boundary, sch, ncfg)
    except (SolverError, DomainError) as exc:
        report = getattr(exc, "report", None)
        u = getattr(exc, "u", None)
        err = linf_error(u, tc, sch.grid) if u is not None else math.nan
        rec = RunRecord(case, kind, label, n, err, report.iterations if report else 0,
                        time.perf_counter() - t0, False)
        return rec, u, report, sch
    rec = RunRecord(case, kind, label, n, linf_error(u, tc, sch.grid), report.iterations,
                    time.perf_counter() - t0, True)
    return rec, u, report, sch


def _cell(args):
    case, scheme, n, params, ncfg = args
    return run_case(case, scheme, n, params, ncfg)[0]


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("MA3D_THREADS", "1")))
    except ValueError:
        return 1


def convergence_table(case: str, schemes, resolutions, params: dict | None = None,
                      ncfg: NewtonConfig | None = None) -> list[RunRecord]:
    """Solve ``case`` for every (scheme, n); failed runs are kept with ``converged=False``."""
    cells = [(case, s, int(n), params, ncfg) for s in schemes for n in resolutions]
    workers = min(max_workers(), len(cells))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_cell, cells))
    return [_cell(c) for c in cells]


TABLE_FIELDS = [f.name for f in fields(RunRecord)]


def write_table_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_FIELDS)
        w.writeheader()
        for r in records:
            row = asdict(r)
            row["linf_error"] = repr(row["linf_error"])
            row["seconds"] = f"{row['seconds']:.3f}"
            w.writerow(row)
