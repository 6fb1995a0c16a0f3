"""Lattice geometry of Z^d under anisotropic metrics.

Stencils are stored up to sign: every direction is kept once, as the
lexicographically larger of ``e`` and ``-e``.  The symmetric set ``{+-e}``
is recovered with :meth:`Stencil.symmetric`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

AREA_EPS = 1e-10
COSET_RTOL = 1e-12


def canonical(e) -> tuple[int, ...]:
    """Sign representative of ``e``: the lexicographically larger of e, -e."""
    t = tuple(int(x) for x in e)
    m = tuple(-x for x in t)
    return max(t, m)


def is_coprime(e) -> bool:
    return any(e) and math.gcd(*(abs(int(x)) for x in e)) == 1


@dataclass(frozen=True)
class Stencil:
    """Finite set of co-prime lattice directions, identified up to sign."""

    directions: np.ndarray
    label: str = "custom"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=np.int64)
        if dirs.ndim != 2 or len(dirs) == 0:
            raise ValueError("a stencil needs a non-empty (m, d) array of directions")
        index = {}
        rows = []
        for e in dirs:
            if not is_coprime(e):
                raise ValueError(f"direction {tuple(e)} is zero or not co-prime")
            c = canonical(e)
            if c in index:
                raise ValueError(f"duplicate direction {c} (after sign identification)")
            index[c] = len(rows)
            rows.append(c)
        dirs = np.array(rows, dtype=np.int64)
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return len(self.directions)

    def __iter__(self):
        return iter(self._index)

    def __contains__(self, e) -> bool:
        return canonical(e) in self._index

    def index(self, e) -> int:
        """Row of ``e`` (or ``-e``) in :attr:`directions`."""
        return self._index[canonical(e)]

    def as_set(self) -> set[tuple[int, ...]]:
        return set(self._index)

    def symmetric(self) -> np.ndarray:
        return np.concatenate([self.directions, -self.directions])

    def spans(self) -> bool:
        return np.linalg.matrix_rank(self.directions.astype(float)) == self.dim

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.directions, axis=1)

    def require_admissible(self):
        if not self.spans():
            raise ValueError(f"stencil {self.label!r} does not span R^{self.dim}")

    def issubset(self, other: "Stencil") -> bool:
        return self.as_set() <= other.as_set()

    def union(self, other: "Stencil", label: str | None = None) -> "Stencil":
        rows = list(self._index) + [e for e in other if e not in self]
        return Stencil(np.array(rows), label or f"{self.label}+{other.label}")

    def to_text(self) -> str:
        lines = [f"# {self.label}"]
        lines += [" ".join(str(int(x)) for x in e) for e in self.directions]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Stencil":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("stencil text must start with a '# <label>' header line")
        label = lines[0][1:].strip() or "custom"
        rows = [[int(tok) for tok in ln.split()] for ln in lines[1:]]
        return cls(np.array(rows), label)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "Stencil":
        return cls.from_text(Path(path).read_text())


def _signed_permutations(gen, d):
    gen = tuple(gen) + (0,) * (d - len(gen))
    out = set()
    for perm in set(itertools.permutations(gen)):
        for signs in itertools.product((1, -1), repeat=d):
            out.add(canonical(s * p for s, p in zip(signs, perm)))
    return out


def make_table1_stencil(which: str = "small", d: int = 3) -> Stencil:
    """The 'small' (13 directions) or 'large' (37 directions) 3D stencil.

    Generated by permuting and flipping the signs of (1,0,0), (1,1,0),
    (1,1,1) and, for 'large', also (2,1,0), (2,1,1).
    """
    generators = {
        "small": [(1,), (1, 1), (1, 1, 1)],
        "large": [(1,), (1, 1), (1, 1, 1), (2, 1), (2, 1, 1)],
    }
    if which not in generators:
        raise ValueError(f"unknown stencil {which!r}; expected 'small' or 'large'")
    dirs = set()
    for g in generators[which]:
        if len(g) <= d:
            dirs |= _signed_permutations(g, d)
    return Stencil(np.array(sorted(dirs, reverse=True)), which)


def coprime_vectors(radius: float, d: int = 3, box: int | None = None) -> np.ndarray:
    """All co-prime integer vectors with Euclidean norm <= radius, up to sign."""
    if box is None:
        box = int(math.floor(radius + 1e-9))
    rng = np.arange(-box, box + 1)
    pts = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), -1).reshape(-1, d)
    pts = pts[(pts**2).sum(1) <= radius**2 * (1 + 1e-12)]
    g = np.gcd.reduce(np.abs(pts), axis=1)
    pts = pts[g == 1]
    # keep the lexicographically larger representative of +-e
    first = np.argmax(pts != 0, axis=1)
    pts = pts[pts[np.arange(len(pts)), first] > 0]
    order = np.lexsort(pts.T[::-1])[::-1]
    return pts[order]


def make_kappa_stencil(kappa: float, d: int = 3) -> Stencil:
    """Co-prime vectors of norm at most ``kappa * sqrt(d)``.

    Consistent for every SPD matrix with ``sqrt(cond(M)) <= kappa``.
    """
    if not kappa >= 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    return Stencil(coprime_vectors(kappa * math.sqrt(d), d), f"kappa:{kappa:g}")


def as_spd(M, check: bool = True) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ValueError("matrix must be symmetric")
    M = 0.5 * (M + M.T)
    if check and np.linalg.eigvalsh(M)[0] <= 0:
        raise ValueError("matrix must be positive definite")
    return M


def from_upper_triangle(entries) -> np.ndarray:
    """Symmetric matrix from its row-major upper triangle (6 entries for d=3)."""
    entries = list(entries)
    d = int(round((math.sqrt(8 * len(entries) + 1) - 1) / 2))
    if d * (d + 1) // 2 != len(entries):
        raise ValueError(f"{len(entries)} entries is not an upper triangle")
    M = np.zeros((d, d))
    M[np.triu_indices(d)] = entries
    return M + np.triu(M, 1).T


def kappa_of(M) -> float:
    """sqrt of the condition number, ``sqrt(||M|| ||M^-1||)``."""
    w = np.linalg.eigvalsh(as_spd(M))
    return math.sqrt(w[-1] / w[0])


def voronoi_candidates(M) -> np.ndarray:
    """Co-prime vectors that may be M-Voronoi vectors: ||e|| <= kappa(M) sqrt(d)."""
    d = len(M)
    radius = kappa_of(M) * math.sqrt(d)
    return coprime_vectors(radius, d, box=math.ceil(radius) + 1)


def _strict_geometric(M, candidates):
    from .polytope import symmetric_polytope

    # Vor(M) = {g : 2<g, Me> <= |e|_M^2 for all e}
    normals = candidates @ M
    offsets = np.einsum("ij,ij->i", normals, candidates)
    meas = symmetric_polytope(normals, offsets)
    return candidates[meas.facet_area > AREA_EPS]


def _strict_coset(M, radius_factor=2.0):
    """Strict Voronoi vectors as unique (up to sign) minimizers of ||v||_M on cosets of 2Z^d."""
    d = len(M)
    radius = radius_factor * kappa_of(M) * math.sqrt(d)
    box = math.ceil(radius) + 1
    rng = np.arange(-box, box + 1)
    z = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), -1).reshape(-1, d)
    z = z[((z**2).sum(1) <= radius**2) & z.any(1)]
    exact = np.all(M == np.round(M))
    if exact:
        Mi = np.round(M).astype(np.int64)
        q = np.einsum("ij,jk,ik->i", z, Mi, z)
    else:
        q = np.einsum("ij,jk,ik->i", z.astype(float), M, z.astype(float))
    cls = (z % 2) @ (1 << np.arange(d))
    out = []
    for c in range(1, 2**d):
        sel = cls == c
        qc, zc = q[sel], z[sel]
        qmin = qc.min()
        tol = 0 if exact else COSET_RTOL * max(1.0, abs(qmin))
        minimizers = zc[qc <= qmin + tol]
        if len(minimizers) == 2:
            out.append(canonical(minimizers[0]))
    return np.array(sorted(out, reverse=True), dtype=np.int64).reshape(-1, d)


def strict_voronoi_vectors(M, method: str = "geometric") -> np.ndarray:
    """Strict M-Voronoi vectors (one per sign pair), as an ``(k, d)`` int array.

    ``method='geometric'`` keeps the candidates whose facet of the
    Voronoi polytope has positive area; ``method='coset'`` is the
    independent check by minimization over the cosets of 2Z^d.
    """
    M = as_spd(M)
    if method == "geometric":
        vecs = _strict_geometric(M, voronoi_candidates(M))
    elif method == "coset":
        vecs = _strict_coset(M)
    else:
        raise ValueError(f"unknown method {method!r}")
    vecs = np.array(sorted((canonical(e) for e in vecs), reverse=True), dtype=np.int64)
    return vecs.reshape(-1, len(M))


def is_consistent(M, V: Stencil, method: str = "geometric") -> bool:
    """True iff ``V`` contains every strict M-Voronoi vector."""
    V.require_admissible()
    return all(tuple(e) in V for e in strict_voronoi_vectors(M, method))


@dataclass(frozen=True)
class OrthogonalTripletSet:
    """d-plets of pairwise orthogonal co-prime vectors, shape ``(k, d, d)``."""

    triplets: np.ndarray
    label: str = "custom"

    def __len__(self):
        return len(self.triplets)

    def stencil(self) -> Stencil:
        """Every vector appearing in some triplet."""
        vecs = {canonical(e) for B in self.triplets for e in B}
        return Stencil(np.array(sorted(vecs, reverse=True)), f"ws:{self.label}")


def make_ws_triplets(box_radius: int, d: int = 3) -> OrthogonalTripletSet:
    """Orthogonal d-plets of co-prime vectors within ``{-r..r}^d``.

    Counted up to reordering and individual sign flips.
    """
    if box_radius not in (1, 2, 3):
        raise ValueError("box_radius must be 1, 2 or 3")
    r = box_radius
    rng = np.arange(-r, r + 1)
    pts = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), -1).reshape(-1, d)
    vecs = sorted({canonical(p) for p in pts if is_coprime(p)}, reverse=True)
    V = np.array(vecs)
    orth = (V @ V.T) == 0
    found = []

    def extend(clique, candidates):
        if len(clique) == d:
            found.append(V[clique])
            return
        for k in candidates:
            extend(clique + [k], [j for j in candidates if j > k and orth[k, j]])

    extend([], list(range(len(V))))
    label = {1: "small", 2: "medium", 3: "large"}[r]
    return OrthogonalTripletSet(np.array(found, dtype=np.int64), label)
