"""Polytope kernel: H/V representations, support and radial functions.

Polytopes are stored as intersections of halfspaces ``<x, u_i> <= t_i`` with
unit normals ``u_i``.  The vertex description is recovered through qhull's
halfspace intersection (a dual convex hull around an interior point) and is
cached on the :class:`HPolytope` instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, cKDTree
from scipy.spatial import QhullError

from .errors import DegenerateGeometry, EmptyInterior, Unbounded

# Relative band used for redundancy, incidence and rank decisions.
REL_TOL = 1e-9
# Minimum angular separation between atoms of a measure.
MIN_SEPARATION = 1e-9


def unit_vectors(vectors) -> np.ndarray:
    """Return ``vectors`` (one per row) rescaled to unit length."""
    arr = np.atleast_2d(np.asarray(vectors, dtype=float))
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        raise ValueError("direction vectors must be finite and nonzero")
    return arr / norms[:, None]


def unit_vector(v) -> np.ndarray:
    return unit_vectors(v)[0]


def _check_separation(normals: np.ndarray) -> None:
    if len(normals) < 2:
        return
    # Chord length equals the angle to first order; a Gram test cannot see 1e-9 rad.
    pairs = cKDTree(normals).query_pairs(2.0 * math.sin(MIN_SEPARATION / 2.0), output_type="ndarray")
    if len(pairs):
        i, j = pairs[0]
        raise ValueError(f"normals {i} and {j} coincide")


@dataclass(frozen=True)
class DirectionWeightMeasure:
    """Discrete measure on the sphere: atom ``weights[i]`` sits at ``normals[i]``."""

    normals: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        normals = unit_vectors(self.normals)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if normals.shape[1] < 2:
            raise ValueError("dimension must be at least 2")
        if len(weights) != len(normals):
            raise ValueError("need exactly one weight per normal")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("weights must be positive")
        _check_separation(normals)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


class Facet(NamedTuple):
    normal_index: int
    vertex_indices: tuple[int, ...]
    # (s, n, n): s simplices of dimension n-1, each given by n points in R^n.
    simplices: np.ndarray
    area: float


@dataclass(frozen=True)
class VPolytope:
    vertices: np.ndarray
    facets: tuple[Facet, ...]
    scale: float

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def facet_of(self, normal_index: int) -> Facet | None:
        for f in self.facets:
            if f.normal_index == normal_index:
                return f
        return None

    @property
    def facet_indices(self) -> tuple[int, ...]:
        return tuple(f.normal_index for f in self.facets)


@dataclass(frozen=True)
class HPolytope:
    """``{x : <x, normals[i]> <= offsets[i]}``; build through :func:`build_hpolytope`."""

    normals: np.ndarray
    offsets: np.ndarray
    redundant: tuple[int, ...] = ()
    _vpoly: VPolytope | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        normals = unit_vectors(self.normals)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if len(offsets) != len(normals):
            raise ValueError("need exactly one offset per normal")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.offsets))) if len(self.offsets) else 0.0

    def vpolytope(self) -> VPolytope:
        if self._vpoly is None:
            object.__setattr__(self, "_vpoly", h_to_v(self))
        return self._vpoly

    def scaled(self, factor: float) -> "HPolytope":
        return build_hpolytope(self.normals, factor * self.offsets)

    def linear_image(self, phi) -> "HPolytope":
        """The polytope ``phi P`` for an invertible matrix ``phi``."""
        phi = np.asarray(phi, dtype=float)
        w = self.normals @ np.linalg.inv(phi)  # rows are phi^{-T} u_i
        norms = np.linalg.norm(w, axis=1)
        return build_hpolytope(w / norms[:, None], self.offsets / norms)


class HemisphereTest(NamedTuple):
    valid: bool
    witness: np.ndarray | None


class OriginDiagnostics(NamedTuple):
    interior: bool
    inradius_from_origin: float
    zero_offset_normals: tuple[int, ...]
    Xi_flagged: bool


def validate_measure(mu) -> HemisphereTest:
    """Check that the support of ``mu`` is not contained in a closed hemisphere.

    ``mu`` may be a :class:`DirectionWeightMeasure` or an array of directions.
    On failure the witness ``w`` satisfies ``<u_i, w> <= 0`` for every atom.
    """
    normals = mu.normals if isinstance(mu, DirectionWeightMeasure) else unit_vectors(mu)
    k, n = normals.shape

    sv = np.linalg.svd(normals, compute_uv=False)
    if len(sv) < n or sv[-1] <= 1e-12 * max(sv[0], 1.0):
        # Atoms lie in a hyperplane; its normal is a witness.
        _, _, vt = np.linalg.svd(normals)
        w = vt[-1]
        return HemisphereTest(False, _canonical_sign(w, normals))

    # max s  s.t.  sum lam_i u_i = 0, sum lam_i = 1, lam_i >= s
    c = np.zeros(k + 1)
    c[-1] = -1.0
    a_eq = np.zeros((n + 1, k + 1))
    a_eq[:n, :k] = normals.T
    a_eq[n, :k] = 1.0
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0
    a_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(k), A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * k + [(None, 1.0)], method="highs")
    if res.status == 0 and -res.fun > 1e-12:
        return HemisphereTest(True, None)

    # Witness: min sum <u_i, w>  s.t.  <u_i, w> <= 0, |w|_inf <= 1.
    res = linprog(normals.sum(axis=0), A_ub=normals, b_ub=np.zeros(k),
                  bounds=[(-1.0, 1.0)] * n, method="highs")
    w = res.x
    if res.status != 0 or np.linalg.norm(w) == 0.0:
        raise DegenerateGeometry("hemisphere test inconclusive")
    return HemisphereTest(False, w / np.linalg.norm(w) + 0.0)


def _canonical_sign(w: np.ndarray, normals: np.ndarray) -> np.ndarray:
    w = w / np.linalg.norm(w)
    return (-w if np.sum(normals @ w) > 0 else w) + 0.0


def chebyshev_center(normals: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside ``{<x,u_i> <= t_i}``."""
    k, n = normals.shape
    scale = max(float(np.max(np.abs(offsets))), 1e-300)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([normals, np.ones((k, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=offsets, bounds=[(None, None)] * n + [(0, scale)],
                  method="highs")
    if res.status != 0:
        raise EmptyInterior("halfspace system is infeasible")
    return res.x[:n], float(res.x[-1])


def build_hpolytope(normals, offsets) -> HPolytope:
    """Validate ``{x : <x,u_i> <= t_i}`` and record its redundant constraints."""
    normals = unit_vectors(normals)
    offsets = np.asarray(offsets, dtype=float).reshape(-1)
    k, n = normals.shape
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if k < n + 1:
        raise Unbounded(f"{k} halfspaces cannot bound a body in R^{n}")
    if np.any(offsets < 0):
        raise ValueError("offsets must be nonnegative (origin contained)")
    if not validate_measure(normals).valid:
        raise Unbounded("normals do not positively span the space")
    poly = HPolytope(normals, offsets)
    vp = h_to_v(poly)
    scale = vp.scale
    support = np.max(normals @ vp.vertices.T, axis=1)
    redundant = tuple(int(i) for i in np.flatnonzero(support < offsets - REL_TOL * scale))
    return HPolytope(normals, offsets, redundant, vp)


def _dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    tree = cKDTree(points)
    parent = np.arange(len(points))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in tree.query_pairs(tol):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(points))])
    merged = np.array([points[roots == r].mean(axis=0) for r in np.unique(roots)])
    order = np.lexsort(merged.T[::-1])
    return merged[order]


def _hyperplane_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (n, n-1) of the complement of unit vector ``u``."""
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(len(u))]))
    return q[:, 1:len(u)]


def simplex_volume(points: np.ndarray) -> np.ndarray:
    """(d)-volume of simplices given as (..., d+1, n) point arrays."""
    pts = np.asarray(points, dtype=float)
    edges = pts[..., 1:, :] - pts[..., :1, :]
    d = edges.shape[-2]
    gram = edges @ np.swapaxes(edges, -1, -2)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / math.factorial(d)


def _triangulate_facet(pts: np.ndarray, normal: np.ndarray, tol: float) -> np.ndarray | None:
    """Fan triangulation of a facet from its centroid; None if lower-dimensional."""
    n = pts.shape[1]
    basis = _hyperplane_basis(normal)
    centroid = pts.mean(axis=0)
    coords = (pts - centroid) @ basis
    if len(pts) < n:
        return None
    sv = np.linalg.svd(coords, compute_uv=False)
    if sv[n - 2] <= tol:
        return None
    if n == 2:
        order = np.argsort(coords[:, 0])
        return pts[[order[0], order[-1]]][None, :, :]
    try:
        hull = ConvexHull(coords)
    except QhullError as exc:
        raise DegenerateGeometry(f"facet triangulation failed: {exc}") from exc
    boundary = pts[hull.simplices]  # (s, n-1, n)
    apex = np.broadcast_to(centroid, (len(boundary), 1, n))
    simplices = np.concatenate([apex, boundary], axis=1)
    vol = simplex_volume(simplices)
    return simplices[vol > 0.0]


def h_to_v(P: HPolytope) -> VPolytope:
    """Vertices and facets (with fan triangulations) of an H-polytope."""
    normals, offsets = P.normals, P.offsets
    k, n = normals.shape
    scale = float(np.max(offsets)) if k else 0.0
    if scale <= 0.0:
        raise EmptyInterior("all offsets are zero")
    tol = REL_TOL * scale
    center, radius = chebyshev_center(normals, offsets)
    if radius <= tol:
        raise EmptyInterior("polytope has no interior")
    halfspaces = np.hstack([normals, -offsets[:, None]])
    try:
        hs = HalfspaceIntersection(halfspaces, center)
    except QhullError as exc:
        raise DegenerateGeometry(f"halfspace intersection failed: {exc}") from exc
    pts = hs.intersections
    if not np.all(np.isfinite(pts)):
        raise Unbounded("vertex at infinity")
    vertices = _dedupe(pts, tol)

    slack = offsets[:, None] - normals @ vertices.T  # (k, m)
    if np.min(slack) < -1e3 * tol:
        raise DegenerateGeometry("recovered vertex violates a halfspace")
    active = np.abs(slack) <= tol
    facets = []
    for i in range(k):
        idx = np.flatnonzero(active[i])
        if len(idx) < n:
            continue
        simplices = _triangulate_facet(vertices[idx], normals[i], tol)
        if simplices is None or len(simplices) == 0:
            continue
        area = float(np.sum(simplex_volume(simplices)))
        facets.append(Facet(i, tuple(int(j) for j in idx), simplices, area))
    if len(facets) < n + 1:
        raise EmptyInterior("too few facets for a full-dimensional body")
    return VPolytope(vertices, tuple(facets), scale)


def support(P, v) -> float | np.ndarray:
    """Support function ``h_P(v)``; vectorized over rows of ``v``."""
    vp = P.vpolytope() if isinstance(P, HPolytope) else P
    v = np.asarray(v, dtype=float)
    vals = np.max(np.atleast_2d(v) @ vp.vertices.T, axis=1)
    return float(vals[0]) if v.ndim == 1 else vals


def radial_function(P: HPolytope, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized radial function and hit-facet index for rows of ``directions``.

    Ties go to the lowest normal index; ``inf`` with index -1 marks directions
    in which the polytope is unbounded.
    """
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    dots = u @ P.normals.T  # (N, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(dots > 0.0, P.offsets[None, :] / dots, np.inf)
    idx = np.argmin(ratios, axis=1)  # argmin returns the first minimum
    rho = ratios[np.arange(len(u)), idx]
    idx = np.where(np.isfinite(rho), idx, -1)
    return rho, idx


def radial_and_facet(P: HPolytope, u) -> tuple[float, int, tuple[int, ...]]:
    """``(rho_P(u), facet index, tie set)`` for a single direction."""
    u = unit_vector(u)
    dots = P.normals @ u
    pos = np.flatnonzero(dots > 0.0)
    if len(pos) == 0:
        raise Unbounded("ray from the origin never leaves the polytope")
    ratios = P.offsets[pos] / dots[pos]
    rho = float(np.min(ratios))
    ties = pos[ratios <= rho + 1e-12 * max(rho, P.scale)]
    return rho, int(ties[0]), tuple(int(i) for i in ties)


def origin_diagnostics(P: HPolytope, tol: float | None = None) -> OriginDiagnostics:
    vp = P.vpolytope()
    if tol is None:
        tol = REL_TOL * vp.scale
    facet_idx = np.array(vp.facet_indices)
    inradius = float(np.min(P.offsets[facet_idx]))
    zero = tuple(int(i) for i in np.flatnonzero(P.offsets <= tol))
    xi = any(i in zero for i in facet_idx)
    return OriginDiagnostics(inradius > tol, max(inradius, 0.0) + 0.0, zero, xi)


def brute_force_vertices(normals: np.ndarray, offsets: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """All feasible intersections of ``n`` hyperplanes; an O(k^n) reference."""
    from itertools import combinations

    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    k, n = normals.shape
    scale = float(np.max(np.abs(offsets)))
    found = []
    for combo in combinations(range(k), n):
        a = normals[list(combo)]
        if abs(np.linalg.det(a)) < 1e-12:
            continue
        x = np.linalg.solve(a, offsets[list(combo)])
        if np.all(normals @ x <= offsets + tol * scale):
            found.append(x)
    return _dedupe(np.array(found), tol * scale)


def regular_polygon_normals(m: int, phase: float = 0.0) -> np.ndarray:
    angles = phase + 2.0 * np.pi * np.arange(m) / m
    return np.column_stack([np.cos(angles), np.sin(angles)])


def box(lower: Sequence[float], upper: Sequence[float]) -> HPolytope:
    """Axis-parallel box; normals ordered +e_1, -e_1, +e_2, -e_2, ..."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = len(lower)
    normals, offsets = [], []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        normals += [e, -e]
        offsets += [upper[j], -lower[j]]
    return build_hpolytope(normals, offsets)
