"""Damped Newton solver for ``f(u) = y``.

The step fraction is ``delta = 2^-k`` with the smallest ``k >= 0`` such that
the candidate stays in the domain of ``f`` and the sup-norm residual decreases
by the factor ``1 - delta / 2``.
"""
from __future__ import annotations

import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import DomainError, Scheme, SparseSystem

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message, u=None, report=None):
        super().__init__(message)
        self.u = u
        self.report = report


class LineSearchError(SolverError):
    pass


class MaxIterationsError(SolverError):
    pass


class LinearSolveError(SolverError):
    pass


@dataclass
class NewtonConfig:
    tol_residual: float = 1e-8
    max_iters: int = 200
    max_halvings: int = 60
    linear_tol: float = 1e-10
    verbose: bool = False

    def __post_init__(self):
        if min(self.tol_residual, self.max_iters, self.max_halvings, self.linear_tol) <= 0:
            raise ValueError("Newton parameters must be positive")


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    damping_history: list = field(default_factory=list)
    linear_solve_stats: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    message: str = ""

    def to_dict(self):
        return asdict(self)


def linear_solve(matrix, rhs, linear_tol=1e-10, refine_steps=5):
    """Sparse LU solve with iterative refinement and a relative residual check.

    Rows are first scaled by their largest magnitude, so that equations near
    the edge of the domain (huge Jacobian rows) and the unit boundary rows
    are weighed alike; the residual is measured on the scaled system.
    Returns ``(x, relative_residual)``.
    """
    A = sp.csr_matrix(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    scale = np.asarray(abs(A).max(axis=1).todense()).ravel()
    if np.any(scale == 0):
        raise LinearSolveError("matrix has an empty row")
    A = sp.diags(1 / scale) @ A
    A = A.tocsc()
    b = b / scale
    bnorm = np.linalg.norm(b, np.inf)
    if bnorm == 0:
        return np.zeros_like(b), 0.0
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # exactly singular
        raise LinearSolveError(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(b)
    rel = np.linalg.norm(A @ x - b, np.inf) / bnorm
    for _ in range(refine_steps):
        if not np.isfinite(rel) or rel <= linear_tol:
            break
        x = x + lu.solve(b - A @ x)
        rel = np.linalg.norm(A @ x - b, np.inf) / bnorm
    if not np.all(np.isfinite(x)) or rel > linear_tol:
        raise LinearSolveError(f"linear solve relative residual {rel:.3g} exceeds {linear_tol:.1g}")
    return x, rel


def _progress(ncfg, msg):
    log.info(msg)
    if ncfg.verbose:
        print(msg, file=sys.stderr)


def default_seed(grid) -> np.ndarray:
    """``u(x) = |x|^2`` in physical coordinates."""
    return grid.sample(lambda p: (p**2).sum(1))


def solve(rho, sigma, scheme: Scheme, ncfg: NewtonConfig | None = None, seed=None):
    """Solve ``ln D u = ln rho`` on X, ``u = sigma`` on dX by damped Newton.

    Returns ``(u, report)``.  Raises :class:`DomainError` if the seed is
    outside the domain, and a :class:`SolverError` subclass (carrying the
    last iterate and the report) when the iteration fails.
    """
    ncfg = ncfg or NewtonConfig()
    grid = scheme.grid
    y = scheme.target(rho, sigma)
    u = default_seed(grid) if seed is None else np.array(seed, dtype=float)
    report = SolveReport()
    t0 = time.perf_counter()

    system: SparseSystem = scheme.system(u, y)
    res = np.linalg.norm(system.residual, np.inf)
    report.residual_history.append(float(res))
    _progress(ncfg, f"iter 0  residual {res:.3e}")
    while res > ncfg.tol_residual:
        if report.iterations >= ncfg.max_iters:
            report.wall_time = time.perf_counter() - t0
            report.message = "maximum number of iterations exceeded"
            raise MaxIterationsError(report.message, u, report)
        try:
            du, lin_res = linear_solve(system.jacobian, -system.residual, ncfg.linear_tol)
        except LinearSolveError as exc:
            report.wall_time = time.perf_counter() - t0
            report.message = str(exc)
            raise LinearSolveError(str(exc), u, report) from exc
        delta = 1.0
        for _ in range(ncfg.max_halvings + 1):
            cand = u + delta * du
            try:
                new_res = np.linalg.norm(scheme.evaluate(cand) - y, np.inf)
            except DomainError:
                new_res = math.inf
            if new_res <= (1 - delta / 2) * res:
                break
            delta *= 0.5
        else:
            report.wall_time = time.perf_counter() - t0
            report.message = "line search exceeded the maximum number of halvings"
            raise LineSearchError(report.message, u, report)
        u = cand
        report.iterations += 1
        report.damping_history.append(delta)
        report.linear_solve_stats.append({"relative_residual": float(lin_res)})
        system = scheme.system(u, y)
        res = np.linalg.norm(system.residual, np.inf)
        report.residual_history.append(float(res))
        _progress(ncfg, f"iter {report.iterations}  delta {delta:g}  residual {res:.3e}  "
                        f"linear residual {lin_res:.1e}")
    report.converged = True
    report.wall_time = time.perf_counter() - t0
    report.message = "converged"
    return u, report


def sanity_bounds(u, rho, sigma, grid, slack=1e-9) -> bool:
    """Check the a-priori two-sided bound on a discrete solution.

    ``min sigma - (n^-d sum_X rho / omega_d)^(1/d) diam <= u <= max sigma``,
    with the extrema of sigma taken over the discrete boundary.
    """
    u = np.asarray(u, dtype=float)
    d = grid.domain.dim
    pts = grid.points
    sig = np.asarray(sigma(pts[grid.n_interior:]), dtype=float)
    rho_v = np.asarray(rho(pts[: grid.n_interior]), dtype=float)
    omega = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    mass = rho_v.sum() / grid.n**d
    lower = sig.min() - (mass / omega) ** (1 / d) * grid.domain.diameter
    upper = sig.max()
    scale = slack * max(1.0, abs(upper), abs(lower))
    inner = u[: grid.n_interior]
    return bool(inner.min() >= lower - scale and u.max() <= upper + scale)
