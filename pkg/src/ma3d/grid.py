"""Cartesian discretization of a convex domain.

Points are stored in lattice units: the interior ``X`` is ``n * Omega`` intersected
with ``Z^d``.  Boundary points are the first hits of the rays ``x + h e``
on ``n * dOmega`` for every interior ``x`` and stencil direction ``+-e``.
Discrete maps are plain arrays over ``X`` followed by ``dX``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import Stencil


@dataclass(frozen=True)
class Domain:
    """Open convex domain: the unit cube ``]0,1[^d`` or a ball."""

    kind: str = "cube"
    dim: int = 3
    center: tuple = None
    radius: float = None

    def __post_init__(self):
        if self.kind not in ("cube", "ball"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "ball":
            if self.center is None or self.radius is None or self.radius <= 0:
                raise ValueError("a ball needs a center and a positive radius")
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
            object.__setattr__(self, "dim", len(self.center))

    @property
    def diameter(self) -> float:
        return math.sqrt(self.dim) if self.kind == "cube" else 2 * self.radius


def unit_cube(d: int = 3) -> Domain:
    return Domain("cube", d)


def ball(center, radius) -> Domain:
    return Domain("ball", len(center), tuple(center), float(radius))


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    n: int
    stencil: Stencil
    interior: np.ndarray  # (Ni, d) int, lattice units
    boundary: np.ndarray  # (Nb, d) float, lattice units
    neighbor: np.ndarray  # (Ni, m, 2) index of x + h e (sign 0) and x - h e (sign 1)
    step: np.ndarray  # (Ni, m, 2) step h > 0

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def size(self) -> int:
        return self.n_interior + self.n_boundary

    @cached_property
    def points(self) -> np.ndarray:
        """Physical coordinates of all unknowns, interior first."""
        return np.concatenate([self.interior / self.n, self.boundary / self.n])

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func`` (vectorized over ``(N, d)`` physical points) on X and dX."""
        return np.asarray(func(self.points), dtype=float)

    def index_of(self, x) -> int:
        """Index of the interior lattice point ``x``."""
        hits = np.nonzero(np.all(self.interior == np.asarray(x), axis=1))[0]
        if len(hits) == 0:
            raise KeyError(f"{tuple(x)} is not an interior point")
        return int(hits[0])

    def neighbor_of(self, i: int, e):
        """``(h, index)`` of the first point of X or dX hit from interior point i along e."""
        k = self.stencil.index(e)
        s = 0 if tuple(e) == tuple(self.stencil.directions[k]) else 1
        return float(self.step[i, k, s]), int(self.neighbor[i, k, s])

    @cached_property
    def weights(self):
        """Coefficients ``(c+, c-)`` with ``Delta_e u(x) = c+ (u(x+h+e) - u(x)) + c- (u(x-h-e) - u(x))``.

        Includes the ``n^2`` factor, so differences are in physical units.
        """
        hp, hm = self.step[..., 0], self.step[..., 1]
        base = 2.0 * self.n**2 / (hp + hm)
        return base / hp, base / hm

    def deep_interior(self) -> np.ndarray:
        """Interior indices whose full stencil ``x +- e`` stays in X."""
        return np.nonzero(np.all(self.neighbor < self.n_interior, axis=(1, 2))
                          & np.all(self.step == 1, axis=(1, 2)))[0]


def _enumerate_interior(domain: Domain, n: int):
    d = domain.dim
    if domain.kind == "cube":
        lo = np.ones(d, dtype=np.int64)
        shape = (n - 1,) * d
    else:
        c = np.asarray(domain.center) * n
        r = domain.radius * n
        lo = np.floor(c - r).astype(np.int64)
        hi = np.ceil(c + r).astype(np.int64)
        shape = tuple(hi - lo + 1)
    grids = np.meshgrid(*[np.arange(lo[k], lo[k] + shape[k]) for k in range(d)], indexing="ij")
    pts = np.stack(grids, -1).reshape(-1, d)
    if domain.kind == "ball":
        pts = pts[((pts - c) ** 2).sum(1) < r**2]
    lookup = -np.ones(shape, dtype=np.int64)
    lookup[tuple((pts - lo).T)] = np.arange(len(pts))
    return pts, lo, lookup


def _lookup(lookup, lo, q):
    rel = q - lo
    ok = np.all((rel >= 0) & (rel < np.array(lookup.shape)), axis=1)
    out = -np.ones(len(q), dtype=np.int64)
    out[ok] = lookup[tuple(rel[ok].T)]
    return out


def build_grid(domain: Domain, n: int, V: Stencil) -> Grid:
    """Interior points, boundary points and steps ``h_x^e`` for all ``+-e`` in V."""
    if n < 2:
        raise ValueError("n must be >= 2")
    V.require_admissible()
    if V.dim != domain.dim:
        raise ValueError("stencil and domain dimensions differ")
    X, lo, lookup = _enumerate_interior(domain, n)
    if len(X) == 0:
        raise ValueError("grid has an empty interior")
    d = domain.dim
    Ni, m = len(X), len(V)
    neighbor = np.empty((Ni, m, 2), dtype=np.int64)
    step = np.empty((Ni, m, 2))
    bkeys, bslots = [], []
    if domain.kind == "cube":
        L = math.lcm(*range(1, int(np.abs(V.directions).max()) + 1))
    for k, e in enumerate(V.directions):
        for s, v in enumerate((e, -e)):
            idx = _lookup(lookup, lo, X + v)
            inner = idx >= 0
            neighbor[inner, k, s] = idx[inner]
            step[inner, k, s] = 1.0
            out = np.nonzero(~inner)[0]
            if len(out) == 0:
                continue
            x = X[out]
            if domain.kind == "cube":
                # exit parameter t = p / q, exact, from the face hit first
                nz = np.nonzero(v)[0]
                p = np.where(v[nz] > 0, n - x[:, nz], x[:, nz])
                q = np.abs(v[nz])
                j = np.argmin(p / q, axis=1)
                pj, qj = p[np.arange(len(out)), j], q[j]
                step[out, k, s] = pj / qj
                key = L * x + ((L // qj) * pj)[:, None] * v
            else:
                c = np.asarray(domain.center) * n
                r = domain.radius * n
                a = float(v @ v)
                b = (x - c) @ v
                cc = ((x - c) ** 2).sum(1) - r**2
                t = np.minimum((-b + np.sqrt(b * b - a * cc)) / a, 1.0)
                step[out, k, s] = t
                key = np.round((x + t[:, None] * v) / n, 12)
            bkeys.append(key)
            bslots.append((out, k, s))
    if bkeys:
        allkeys = np.concatenate(bkeys)
        uniq, inv = np.unique(allkeys, axis=0, return_inverse=True)
        inv = inv.ravel()
        if domain.kind == "cube":
            boundary = uniq / L
        else:
            boundary = np.zeros((len(uniq), d))
            pts = np.concatenate([X[o] + step[o, k, s][:, None] * (V.directions[k] * (1 - 2 * s))
                                  for o, k, s in bslots])
            boundary[inv] = pts
        pos = 0
        for o, k, s in bslots:
            neighbor[o, k, s] = Ni + inv[pos:pos + len(o)]
            pos += len(o)
    else:
        boundary = np.zeros((0, d))
    return Grid(domain, n, V, X, boundary, neighbor, step)


def second_differences(grid: Grid, u) -> np.ndarray:
    """``Delta_e u(x)`` in physical units for every interior x and direction e, shape (Ni, m)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.size,):
        raise ValueError(f"field has shape {u.shape}, grid has {grid.size} unknowns")
    cp, cm = grid.weights
    u0 = u[: grid.n_interior, None]
    return cp * (u[grid.neighbor[..., 0]] - u0) + cm * (u[grid.neighbor[..., 1]] - u0)


def second_difference(grid: Grid, u, i: int, e) -> float:
    """Second difference of u at interior point i along e, boundary-aware."""
    hp, ip = grid.neighbor_of(i, e)
    hm, im = grid.neighbor_of(i, tuple(-np.asarray(e)))
    u = np.asarray(u, dtype=float)
    return grid.n**2 * 2 / (hp + hm) * ((u[ip] - u[i]) / hp + (u[im] - u[i]) / hm)


def sup_step(grid: Grid) -> float:
    return float(grid.step.max())


def dump_csv(grid: Grid, u, path):
    """Write ``index,kind,x0..,value`` rows for every unknown (physical coordinates)."""
    u = np.asarray(u, dtype=float)
    d = grid.domain.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "kind"] + [f"x{k}" for k in range(d)] + ["value"])
        for i, p in enumerate(grid.points):
            kind = "interior" if i < grid.n_interior else "boundary"
            w.writerow([i, kind, *(repr(float(c)) for c in p), repr(float(u[i]))])


def load_csv(path):
    """Read a dump back as ``(kinds, points, values)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, rows = rows[0], rows[1:]
    d = len(header) - 3
    kinds = np.array([r[1] for r in rows])
    pts = np.array([[float(c) for c in r[2:2 + d]] for r in rows]).reshape(-1, d)
    vals = np.array([float(r[-1]) for r in rows])
    return kinds, pts, vals
