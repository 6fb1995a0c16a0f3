"""Discrete Monge-Ampere operators and the Newton system of their logarithm.

Three schemes share one assembly path.  Each turns the second differences
``Delta_e u(x)`` (shape ``(Ni, m)``) into ``ln D u(x)`` and its sensitivities
``d ln D / d Delta_e``; the Jacobian then follows from the difference weights
of the grid.  Boundary unknowns carry the identity equation ``u(x) = sigma(x)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .grid import Domain, Grid, build_grid, second_differences
from .lattice import OrthogonalTripletSet, Stencil, make_table1_stencil, make_ws_triplets
from .polytope import measure_halfspaces, symmetric_polytopes


class DomainError(ValueError):
    """A discrete map lies outside the domain of the log-transformed system."""

    def __init__(self, message, point=None, direction=None):
        super().__init__(message)
        self.point = point
        self.direction = direction


def _differences(grid, u, index):
    D = second_differences(grid, u)
    return D if index is None else D[np.atleast_1d(index)]


def _squeeze(val, index):
    return float(val[0]) if index is not None and np.ndim(index) == 0 else val


def apply_DV(grid: Grid, u, index=None, return_areas=False):
    """Volume of ``{g : 2<g,e> <= Delta_e u(x), e in V}`` at interior points.

    The stencil is the one the grid was built with.  Zero wherever some
    ``Delta_e u(x) <= 0``.
    """
    D = _differences(grid, u, index)
    vol, area = symmetric_polytopes(grid.stencil.directions, D)
    if return_areas:
        return _squeeze(vol, index), (area[0] if np.ndim(index) == 0 and index is not None else area)
    return _squeeze(vol, index)


def _fd_indices(stencil: Stencil):
    d = stencil.dim
    eye = np.eye(d, dtype=int)
    diag = [stencil.index(eye[i]) for i in range(d)]
    plus, minus = {}, {}
    for i, j in itertools.combinations(range(d), 2):
        plus[i, j] = stencil.index(eye[i] + eye[j])
        minus[i, j] = stencil.index(eye[i] - eye[j])
    return diag, plus, minus


def fd_matrices(stencil: Stencil, D) -> np.ndarray:
    """Finite-difference hessians ``delta_ij`` from second differences, shape (N, d, d)."""
    diag, plus, minus = _fd_indices(stencil)
    d = stencil.dim
    H = np.empty((len(D), d, d))
    for i in range(d):
        H[:, i, i] = D[:, diag[i]]
    for (i, j), kp in plus.items():
        H[:, i, j] = H[:, j, i] = 0.25 * (D[:, kp] - D[:, minus[i, j]])
    return H


def apply_FD(grid: Grid, u, index=None):
    """Determinant of the finite-difference hessian (may be negative)."""
    D = _differences(grid, u, index)
    return _squeeze(np.linalg.det(fd_matrices(grid.stencil, D)), index)


def _triplet_columns(stencil: Stencil, triplets: OrthogonalTripletSet):
    cols = np.array([[stencil.index(e) for e in B] for B in triplets.triplets])
    norms2 = (triplets.triplets.astype(float) ** 2).sum(-1)
    return cols, norms2


def apply_WS(grid: Grid, u, triplets: OrthogonalTripletSet, index=None):
    """Minimum over triplets of the product of ``max(Delta_e u, 0) / |e|^2``."""
    D = _differences(grid, u, index)
    cols, norms2 = _triplet_columns(grid.stencil, triplets)
    prod = np.prod(np.maximum(D[:, cols], 0) / norms2, axis=-1)
    return _squeeze(prod.min(axis=1), index)


def apply_DV_asymmetric(grid: Grid, u, index=None):
    """Volume of ``{g : <g,e> <= n^2 (u(x+e) - u(x)), e in +-V}``.

    Only defined where every ``x + e`` is an interior point.  For quadratic
    maps the polytope is a translate of the one in :func:`apply_DV`.
    """
    u = np.asarray(u, dtype=float)
    idx = np.arange(grid.n_interior) if index is None else np.atleast_1d(index)
    ok = (np.all(grid.neighbor[idx] < grid.n_interior, axis=(1, 2))
          & np.all(grid.step[idx] == 1, axis=(1, 2)))
    if not np.all(ok):
        bad = int(idx[np.argmin(ok)])
        raise DomainError(f"point {bad} is too close to the boundary for the asymmetric operator",
                          point=bad)
    a = grid.stencil.symmetric().astype(float)
    out = np.empty(len(idx))
    for r, i in enumerate(idx):
        nb = np.concatenate([grid.neighbor[i, :, 0], grid.neighbor[i, :, 1]])
        c = grid.n**2 * (u[nb] - u[i])
        # Chebyshev centre: max t s.t. <g,a> + t|a| <= c
        d = a.shape[1]
        norms = np.linalg.norm(a, axis=1)
        res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.c_[a, norms], b_ub=c,
                      bounds=[(None, None)] * d + [(None, None)])
        if res.status != 0 or -res.fun <= 1e-14 * max(1.0, np.abs(c).max()):
            out[r] = 0.0
            continue
        g0 = res.x[:d]
        out[r], _ = measure_halfspaces(a, c - a @ g0)
    return _squeeze(out, index)


@dataclass
class SparseSystem:
    residual: np.ndarray
    jacobian: sp.csr_matrix


class Scheme:
    """A discretization bound to a grid; computes ``ln D u`` and its sensitivities."""

    name = "scheme"
    label = ""

    def __init__(self, grid: Grid):
        self.grid = grid

    def log_operator(self, D, with_sensitivity=False):  # pragma: no cover - interface
        raise NotImplementedError

    def operator(self, u, index=None):
        """The discrete operator itself (not its logarithm)."""
        raise NotImplementedError  # pragma: no cover

    def check_domain(self, D):
        bad = np.argwhere(~(D > 0))
        if len(bad):
            i, k = bad[0]
            raise DomainError(
                f"Delta_e u(x) = {D[i, k]:.3g} <= 0 at point {i} "
                f"{tuple(self.grid.interior[i])}, direction {tuple(self.grid.stencil.directions[k])}",
                point=int(i), direction=tuple(int(x) for x in self.grid.stencil.directions[k]))

    def target(self, rho, sigma) -> np.ndarray:
        """``y = (ln rho on X, sigma on dX)``."""
        g = self.grid
        pts = g.points
        rho_v = np.asarray(rho(pts[: g.n_interior]), dtype=float)
        if np.any(~(rho_v > 0)):
            raise ValueError("density must be positive on the interior points")
        return np.concatenate([np.log(rho_v), np.asarray(sigma(pts[g.n_interior:]), dtype=float)])

    def evaluate(self, u) -> np.ndarray:
        """``f(u)``: ``ln D u`` on X and ``u`` on dX; raises DomainError outside U0."""
        u = np.asarray(u, dtype=float)
        D = second_differences(self.grid, u)
        self.check_domain(D)
        lnD = self.log_operator(D)
        return np.concatenate([lnD, u[self.grid.n_interior:]])

    def system(self, u, y) -> SparseSystem:
        g = self.grid
        u = np.asarray(u, dtype=float)
        D = second_differences(g, u)
        self.check_domain(D)
        lnD, w = self.log_operator(D, with_sensitivity=True)
        return self._assemble(u, lnD, w, y)

    def _assemble(self, u, fint, w, y):
        """Jacobian from sensitivities ``w = d f(x) / d Delta_e`` of the interior equations."""
        g = self.grid
        cp, cm = g.weights
        Ni, m = w.shape
        rows = np.repeat(np.arange(Ni), m)
        vp = (w * cp).ravel()
        vm = (w * cm).ravel()
        diag = -(w * (cp + cm)).sum(1)
        bidx = np.arange(Ni, g.size)
        I = np.concatenate([rows, rows, np.arange(Ni), bidx])
        J = np.concatenate([g.neighbor[..., 0].ravel(), g.neighbor[..., 1].ravel(), np.arange(Ni), bidx])
        V = np.concatenate([vp, vm, diag, np.ones(len(bidx))])
        jac = sp.csr_matrix((V, (I, J)), shape=(g.size, g.size))
        f = np.concatenate([fint, u[Ni:]])
        return SparseSystem(f - y, jac)


class Proposed(Scheme):
    """Polytope-volume operator ``D_V``."""

    name = "proposed"

    def __init__(self, grid: Grid):
        super().__init__(grid)
        self.label = grid.stencil.label
        self._half_inv_norm = 0.5 / grid.stencil.norms()

    def operator(self, u, index=None):
        return apply_DV(self.grid, u, index)

    def log_operator(self, D, with_sensitivity=False):
        vol, area = symmetric_polytopes(self.grid.stencil.directions, D)
        lnD = np.log(vol)
        if not with_sensitivity:
            return lnD
        return lnD, area * self._half_inv_norm / vol[:, None]


class WideStencil(Scheme):
    """Wide-stencil minimum over orthogonal triplets."""

    name = "ws"

    def __init__(self, grid: Grid, triplets: OrthogonalTripletSet):
        super().__init__(grid)
        self.triplets = triplets
        self.label = triplets.label
        self._cols, self._norms2 = _triplet_columns(grid.stencil, triplets)

    def operator(self, u, index=None):
        return apply_WS(self.grid, u, self.triplets, index)

    def log_operator(self, D, with_sensitivity=False):
        logs = np.log(D[:, self._cols] / self._norms2).sum(-1)
        best = np.argmin(logs, axis=1)
        lnD = logs[np.arange(len(D)), best]
        if not with_sensitivity:
            return lnD
        # generalized gradient: first minimizing triplet
        w = np.zeros_like(D)
        chosen = self._cols[best]
        rows = np.arange(len(D))[:, None]
        np.add.at(w, (np.broadcast_to(rows, chosen.shape), chosen), 1.0 / D[rows, chosen])
        return lnD, w


class FiniteDifference(Scheme):
    """Determinant of the naive finite-difference hessian; not monotone.

    With ``log_form=False`` the interior equations are ``det = rho`` with no
    domain restriction, since the determinant may vanish or change sign.
    """

    name = "fd"
    label = "fd"

    def __init__(self, grid: Grid, log_form: bool = False):
        super().__init__(grid)
        self.log_form = log_form
        self._diag, self._plus, self._minus = _fd_indices(grid.stencil)

    def target(self, rho, sigma):
        y = super().target(rho, sigma)
        if not self.log_form:
            y[: self.grid.n_interior] = np.exp(y[: self.grid.n_interior])
        return y

    def evaluate(self, u):
        if self.log_form:
            return super().evaluate(u)
        u = np.asarray(u, dtype=float)
        D = second_differences(self.grid, u)
        return np.concatenate([self._det(D), u[self.grid.n_interior:]])

    def system(self, u, y):
        if self.log_form:
            return super().system(u, y)
        u = np.asarray(u, dtype=float)
        H = fd_matrices(self.grid.stencil, second_differences(self.grid, u))
        return self._assemble(u, np.linalg.det(H), self._sensitivity(_cofactors(H)), y)

    def _det(self, D):
        return np.linalg.det(fd_matrices(self.grid.stencil, D))

    def log_operator(self, D, with_sensitivity=False):
        H = fd_matrices(self.grid.stencil, D)
        lnD = np.linalg.slogdet(H)[1]
        if not with_sensitivity:
            return lnD
        return lnD, self._sensitivity(np.linalg.inv(H))

    def _sensitivity(self, G):
        """Map ``d F / d delta_ij = G_ij`` (G symmetric) to ``d F / d Delta_e``."""
        w = np.zeros((len(G), len(self.grid.stencil)))
        for i, k in enumerate(self._diag):
            w[:, k] += G[:, i, i]
        for (i, j), kp in self._plus.items():
            w[:, kp] += 0.5 * G[:, i, j]
            w[:, self._minus[i, j]] -= 0.5 * G[:, i, j]
        return w


def _cofactors(H):
    """Cofactor matrices of a batch of 3x3 matrices (``d det / d H``)."""
    r0, r1, r2 = H[:, 0], H[:, 1], H[:, 2]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=1)


FD_STENCIL = Stencil(
    np.array([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, -1, 0),
              (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]), "fd")


def make_scheme(spec: str, domain: Domain, n: int, stencil: Stencil | None = None) -> Scheme:
    """Build a scheme and its grid from ``'proposed:small'``, ``'ws:medium'``, ``'fd'`` etc.

    ``stencil`` overrides the named stencil of the proposed scheme.
    """
    kind, _, arg = spec.partition(":")
    if kind == "proposed":
        V = stencil or make_table1_stencil(arg or "small", domain.dim)
        return Proposed(build_grid(domain, n, V))
    if kind == "ws":
        radius = {"small": 1, "medium": 2, "large": 3}.get(arg or "small")
        if radius is None:
            raise ValueError(f"unknown WS triplet set {arg!r}")
        B = make_ws_triplets(radius, domain.dim)
        return WideStencil(build_grid(domain, n, B.stencil()), B)
    if kind == "fd":
        if domain.dim != 3:
            raise ValueError("the finite-difference scheme is implemented for d = 3")
        return FiniteDifference(build_grid(domain, n, FD_STENCIL))
    raise ValueError(f"unknown scheme {spec!r}")


def assemble_system(u, rho, sigma, scheme: Scheme) -> SparseSystem:
    """Residual ``f(u) - y`` and sparse Jacobian ``df(u)``."""
    return scheme.system(u, scheme.target(rho, sigma))
