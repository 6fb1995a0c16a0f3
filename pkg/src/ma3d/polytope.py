"""Volume and facet areas of halfspace-intersection polytopes.

The polytope ``{g : <g, a_i> <= c_i}`` with all ``c_i > 0`` contains the
origin in its interior and is the polar of ``conv{a_i / c_i}``.  Facets of
that convex hull are vertices of the polytope and vice versa, so one hull
computation gives the vertices, the facet incidences and hence the facet
areas.  The volume is the sum of the cones from the origin over the facets.

The hull itself is delegated to qhull (``scipy.spatial.ConvexHull``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .lattice import Stencil


@dataclass
class PolytopeMeasure:
    volume: float
    facet_area: np.ndarray  # combined area of the facets +-e, one per direction
    nondegenerate: bool


def _hull(points):
    try:
        return ConvexHull(points)
    except QhullError as exc:
        raise ValueError("constraint normals do not span the space") from exc


def _facet_measures(points_list):
    """Facet measures of the polars of ``conv(points)`` for each point set.

    Returns one array per point set, holding the (d-1)-measure of the facet
    supported by each dual point (zero for non-extreme points).
    """
    d = points_list[0].shape[1]
    if d not in (2, 3):
        raise NotImplementedError("facet measures are implemented for d = 2, 3")
    verts, simp, nbr = [], [], []
    nfac = npts = 0
    for pts in points_list:
        hull = _hull(pts)
        eq = hull.equations
        if np.any(eq[:, -1] >= -1e-14 * np.abs(pts).max()):
            raise ValueError("polytope is unbounded")
        verts.append(eq[:, :-1] / -eq[:, -1:])
        simp.append(hull.simplices + npts)
        nbr.append(hull.neighbors + nfac)
        nfac += len(eq)
        npts += len(pts)
    V = np.concatenate(verts)
    S = np.concatenate(simp)
    Nb = np.concatenate(nbr)
    f = np.arange(len(S))
    area = np.zeros(npts)

    if d == 2:
        # each dual vertex is shared by two hull edges -> one primal segment
        for m in range(2):
            g = Nb[:, m]
            keep = f < g
            i = S[keep, 1 - m]
            np.add.at(area, i, np.linalg.norm(V[f[keep]] - V[g[keep]], axis=1))
    else:
        count = np.bincount(S.ravel(), minlength=npts)
        centroid = np.zeros((npts, 3))
        for m in range(3):
            np.add.at(centroid, S[:, m], V)
        centroid /= np.maximum(count, 1)[:, None]
        # fan triangulation of each primal facet from its vertex centroid;
        # the dual edge (i, j) shared by hull facets f, g is the primal edge v_f v_g
        for m in range(3):
            g = Nb[:, m]
            keep = f < g
            vf, vg = V[f[keep]], V[g[keep]]
            for i in (S[keep, (m + 1) % 3], S[keep, (m + 2) % 3]):
                c = centroid[i]
                tri = 0.5 * np.linalg.norm(np.cross(vf - c, vg - c), axis=1)
                np.add.at(area, i, tri)

    sizes = np.cumsum([len(p) for p in points_list])[:-1]
    return np.split(area, sizes)


def measure_halfspaces(normals, offsets):
    """Volume and per-halfspace facet measures of ``{g : <g, a_i> <= c_i}``.

    Requires ``c_i > 0`` (origin in the interior) and a bounded polytope.
    """
    a = np.asarray(normals, dtype=float)
    c = np.asarray(offsets, dtype=float)
    if not np.all(np.isfinite(c)) or not np.all(np.isfinite(a)):
        raise ValueError("non-finite constraint data")
    if np.any(c <= 0):
        raise ValueError("the origin must lie strictly inside every halfspace")
    (area,) = _facet_measures([a / c[:, None]])
    height = c / np.linalg.norm(a, axis=1)
    volume = float(area @ height) / a.shape[1]
    return volume, area


def symmetric_polytopes(normals, offsets):
    """Batch measure of ``{g : 2 |<g, n_k>| <= b_k}`` for each row of ``offsets``.

    Parameters
    ----------
    normals : (m, d) array
    offsets : (N, m) array

    Returns
    -------
    volume : (N,) array
    facet_area : (N, m) array, combined area of the two facets ``+-n_k``
    """
    n = np.asarray(normals, dtype=float)
    b = np.atleast_2d(np.asarray(offsets, dtype=float))
    if not np.all(np.isfinite(b)):
        raise ValueError("non-finite offsets")
    N, m = b.shape
    volume = np.zeros(N)
    facet_area = np.zeros((N, m))
    live = np.nonzero(np.all(b > 0, axis=1))[0]
    if len(live) == 0:
        return volume, facet_area
    dual = 2 * n[None, :, :] / b[live, :, None]
    areas = _facet_measures([np.concatenate([p, -p]) for p in dual])
    combined = np.array([ar[:m] + ar[m:] for ar in areas])
    height = b[live] / (2 * np.linalg.norm(n, axis=1))
    facet_area[live] = combined
    volume[live] = np.einsum("ij,ij->i", combined, height) / n.shape[1]
    return volume, facet_area


def symmetric_polytope(normals, offsets) -> PolytopeMeasure:
    vol, area = symmetric_polytopes(normals, np.asarray(offsets, dtype=float)[None, :])
    return PolytopeMeasure(float(vol[0]), area[0], bool(vol[0] > 0))


def measure_polytope(stencil: Stencil, offsets) -> PolytopeMeasure:
    """Measure ``{g : 2<g,e> <= b_e for all +-e in stencil}``.

    ``d volume / d b_e = facet_area[e] / (2 |e|)``.
    """
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (len(stencil),):
        raise ValueError(f"expected {len(stencil)} offsets, got shape {offsets.shape}")
    return symmetric_polytope(stencil.directions, offsets)


def volume_gradient(stencil: Stencil, measure: PolytopeMeasure) -> np.ndarray:
    """Derivative of the volume with respect to each offset ``b_e``."""
    return measure.facet_area / (2 * stencil.norms())


def measure_D_of_matrix(M, V: Stencil) -> float:
    """Volume of ``{g : 2<g,e> <= <e,Me>}``; equals det(M) when M is consistent for V."""
    M = np.asarray(M, dtype=float)
    e = V.directions.astype(float)
    b = np.einsum("ij,jk,ik->i", e, M, e)
    return measure_polytope(V, b).volume


def _bounding_box(a, c):
    d = a.shape[1]
    lo, hi = np.empty(d), np.empty(d)
    for k in range(d):
        obj = np.zeros(d)
        obj[k] = 1
        for sign, out in ((1, lo), (-1, hi)):
            res = linprog(sign * obj, A_ub=a, b_ub=c, bounds=[(None, None)] * d)
            if res.status != 0:
                raise ValueError(f"cannot bound the region: {res.message}")
            out[k] = sign * res.fun
    return lo, hi


def monte_carlo_volume(normals, offsets, n_samples=10**6, seed=0, quasi=True, chunk=2**18):
    """Sampling estimate of the volume of ``{g : <g, a_i> <= c_i}``.

    Rejection sampling in the LP bounding box; scrambled Sobol points when
    ``quasi`` (``n_samples`` is then rounded up to a power of two).
    """
    from scipy.stats import qmc

    a = np.asarray(normals, dtype=float)
    c = np.asarray(offsets, dtype=float)
    lo, hi = _bounding_box(a, c)
    d = a.shape[1]
    if quasi:
        sampler = qmc.Sobol(d, scramble=True, seed=seed)
        log2 = int(np.ceil(np.log2(n_samples)))
        n_samples = 2**log2
    else:
        rng = np.random.default_rng(seed)
    inside = 0
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        u = sampler.random(k) if quasi else rng.random((k, d))
        g = lo + u * (hi - lo)
        inside += int(np.count_nonzero(np.all(g @ a.T <= c, axis=1)))
        done += k
    return float(np.prod(hi - lo)) * inside / n_samples


def symmetric_halfspaces(normals, offsets):
    """Explicit halfspaces ``(a, c)`` of ``{g : 2|<g,n_k>| <= b_k}``."""
    n = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    return np.concatenate([2 * n, -2 * n]), np.concatenate([b, b])


def polytope_off(normals, offsets) -> str:
    """OFF text of ``{g : <g, a_i> <= c_i}`` (d = 3), for visual inspection."""
    a = np.asarray(normals, dtype=float)
    c = np.asarray(offsets, dtype=float)
    hull = _hull(a / c[:, None])
    eq = hull.equations
    verts = eq[:, :3] / -eq[:, 3:]
    scale = np.abs(verts).max()
    keys = np.round(verts / scale, 10)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    uniq = np.zeros((len(uniq), 3))
    uniq[inv] = verts
    faces = []
    for i in np.unique(hull.simplices):
        ids = np.unique(inv[np.any(hull.simplices == i, axis=1)])
        if len(ids) < 3:
            continue
        p = uniq[ids]
        ctr = p.mean(0)
        nrm = a[i] / np.linalg.norm(a[i])
        u = p[0] - ctr
        u /= np.linalg.norm(u)
        w = np.cross(nrm, u)
        ang = np.arctan2((p - ctr) @ w, (p - ctr) @ u)
        faces.append(ids[np.argsort(ang)])
    lines = ["OFF", f"{len(uniq)} {len(faces)} 0"]
    lines += [" ".join(f"{x:.17g}" for x in v) for v in uniq]
    lines += [" ".join(map(str, [len(fc), *fc])) for fc in faces]
    return "\n".join(lines) + "\n"
