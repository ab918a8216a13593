"""Parameter star bodies Q: radial functions, gauges and linear images.

Every body evaluates both ``radial(u)`` and ``gauge(x)`` on stacked inputs
(rows are points).  The gauge is the Minkowski functional
``||x||_Q = ||x|| / rho_Q(x/||x||)``, positively 1-homogeneous.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import NonPositiveRadial, NotUnimodular
from .polytope import HPolytope, build_hpolytope, unit_vectors
from .sphere import icosphere


class StarBody:
    kind = "abstract"

    def __init__(self, dim: int):
        self.dim = int(dim)

    def radial(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return 1.0 / self.gauge(u)

    def gauge(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        nz = r > 0
        out[nz] = r[nz] / self.radial(x[nz] / r[nz, None])
        return out

    def linear_image(self, phi: np.ndarray) -> "StarBody":
        return LinearImage(self, phi)

    def cones(self) -> list[np.ndarray] | None:
        """Polyhedral cones ``{x : C x >= 0}`` covering R^n on which the gauge is smooth.

        ``None`` means the gauge is smooth away from the origin.
        """
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


class Ball(StarBody):
    kind = "ball"

    def __init__(self, radius: float = 1.0, dim: int = 2):
        super().__init__(dim)
        if not radius > 0:
            raise NonPositiveRadial("ball radius must be positive")
        self.radius = float(radius)

    def radial(self, u):
        u = np.atleast_2d(u)
        return np.full(len(u), self.radius)

    def gauge(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.sqrt(np.einsum("ij,ij->i", x, x)) / self.radius

    def linear_image(self, phi):
        phi = np.asarray(phi, dtype=float)
        return Ellipsoid(self.radius**2 * phi @ phi.T)

    def to_dict(self):
        return {"kind": "ball", "radius": self.radius, "dim": self.dim}


class Ellipsoid(StarBody):
    """``{x : x^T A^{-1} x <= 1}`` for symmetric positive-definite ``A``."""

    kind = "ellipsoid"

    def __init__(self, matrix):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("ellipsoid matrix must be square")
        if not np.allclose(a, a.T, rtol=1e-12, atol=1e-14 * np.max(np.abs(a))):
            raise ValueError("ellipsoid matrix must be symmetric")
        a = 0.5 * (a + a.T)
        if np.min(np.linalg.eigvalsh(a)) <= 0:
            raise NonPositiveRadial("ellipsoid matrix must be positive definite")
        super().__init__(a.shape[0])
        self.matrix = a
        self._inv = np.linalg.inv(a)

    def gauge(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.sqrt(np.clip(np.einsum("ij,jk,ik->i", x, self._inv, x), 0.0, None))

    def radial(self, u):
        return 1.0 / self.gauge(u)

    def linear_image(self, phi):
        phi = np.asarray(phi, dtype=float)
        return Ellipsoid(phi @ self.matrix @ phi.T)

    def to_dict(self):
        return {"kind": "ellipsoid", "matrix": self.matrix.tolist()}


class PolytopeGauge(StarBody):
    kind = "polytope_gauge"

    def __init__(self, polytope: HPolytope):
        if np.any(polytope.offsets <= 0):
            raise NonPositiveRadial("gauge polytope must contain the origin in its interior")
        super().__init__(polytope.dim)
        self.polytope = polytope
        self._scaled = polytope.normals / polytope.offsets[:, None]

    def gauge(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.maximum(np.max(x @ self._scaled.T, axis=1), 0.0)

    def radial(self, u):
        return 1.0 / self.gauge(u)

    def linear_image(self, phi):
        return PolytopeGauge(self.polytope.linear_image(phi))

    def cones(self):
        # The gauge equals <x, a_j> where a_j beats every other a_l.
        a = self._scaled
        return [np.delete(a[j] - a, j, axis=0) for j in range(len(a))]

    def to_dict(self):
        return {"kind": "polytope_gauge", "normals": self.polytope.normals.tolist(),
                "offsets": self.polytope.offsets.tolist()}


class RadialTable(StarBody):
    """Radial function sampled at directions and interpolated.

    In the plane the interpolation is piecewise linear in the polar angle; on
    S^2 it is barycentric over the spherical Delaunay triangulation of the
    sample directions (the icosahedral grid of :meth:`from_function`).
    """

    kind = "radial_table"

    def __init__(self, directions, values):
        dirs = unit_vectors(directions)
        vals = np.asarray(values, dtype=float).reshape(-1)
        if len(vals) != len(dirs):
            raise ValueError("need one radial value per direction")
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise NonPositiveRadial("radial table values must be positive")
        super().__init__(dirs.shape[1])
        self.directions = dirs
        self.values = vals
        if self.dim == 2:
            ang = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * math.pi)
            order = np.argsort(ang)
            self._angles = ang[order]
            self._avals = vals[order]
            if len(ang) < 3 or np.max(np.diff(np.r_[self._angles, self._angles[0] + 2 * math.pi])) >= math.pi:
                raise NonPositiveRadial("radial table leaves a half-circle uncovered")
        elif self.dim == 3:
            hull = ConvexHull(dirs)
            tris = hull.simplices
            if np.max(hull.equations[:, -1]) >= 0:
                raise NonPositiveRadial("radial table directions miss a hemisphere")
            self._tris = tris
            self._inv = np.linalg.inv(np.transpose(dirs[tris], (0, 2, 1)))
            cent = dirs[tris].mean(axis=1)
            self._tree = cKDTree(cent / np.linalg.norm(cent, axis=1, keepdims=True))
        else:
            raise NotImplementedError("radial tables are supported for n = 2, 3")

    @classmethod
    def from_function(cls, func, dim: int, resolution: int = 8) -> "RadialTable":
        if dim == 2:
            ang = 2 * math.pi * np.arange(max(resolution, 3)) / max(resolution, 3)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        elif dim == 3:
            dirs, _ = icosphere(resolution)
        else:
            raise NotImplementedError("radial tables are supported for n = 2, 3")
        return cls(dirs, [float(func(d)) for d in dirs])

    def radial(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.dim == 2:
            ang = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * math.pi)
            return np.interp(ang, self._angles, self._avals, period=2 * math.pi)
        return self._radial3(u / np.linalg.norm(u, axis=1, keepdims=True))

    def _radial3(self, u: np.ndarray) -> np.ndarray:
        out = np.full(len(u), np.nan)
        kq = min(8, len(self._tris))
        _, cand = self._tree.query(u, k=kq)
        cand = np.atleast_2d(cand).reshape(len(u), kq)
        for col in range(kq):
            todo = np.flatnonzero(np.isnan(out))
            if len(todo) == 0:
                break
            t = cand[todo, col]
            coef = np.einsum("nij,nj->ni", self._inv[t], u[todo])
            ok = np.all(coef >= -1e-12, axis=1)
            out[todo[ok]] = self._interp(t[ok], coef[ok])
        for i in np.flatnonzero(np.isnan(out)):
            coef = self._inv @ u[i]
            t = int(np.argmax(np.min(coef, axis=1)))
            out[i] = self._interp(np.array([t]), coef[t][None, :])[0]
        return out

    def cones(self):
        if self.dim == 2:
            u = np.column_stack([np.cos(self._angles), np.sin(self._angles)])
            left = np.column_stack([-u[:, 1], u[:, 0]])
            return [np.vstack([left[j], -left[(j + 1) % len(u)]]) for j in range(len(u))]
        out = []
        for tri in self._tris:
            a, b, c = self.directions[tri]
            normals = np.vstack([np.cross(a, b), np.cross(b, c), np.cross(c, a)])
            if normals[0] @ (a + b + c) < 0:
                normals = -normals
            out.append(normals)
        return out

    def _interp(self, tris: np.ndarray, coef: np.ndarray) -> np.ndarray:
        coef = np.clip(coef, 0.0, None)
        coef = coef / coef.sum(axis=1, keepdims=True)
        return np.einsum("ni,ni->n", coef, self.values[self._tris[tris]])

    def to_dict(self):
        return {"kind": "radial_table", "directions": self.directions.tolist(),
                "values": self.values.tolist()}


class LinearImage(StarBody):
    """``phi Q`` for a body without a closed-form image (e.g. radial tables)."""

    kind = "linear_image"

    def __init__(self, base: StarBody, phi):
        phi = np.asarray(phi, dtype=float)
        super().__init__(base.dim)
        self.base = base
        self.phi = phi
        self._phi_inv = np.linalg.inv(phi)

    def gauge(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.base.gauge(x @ self._phi_inv.T)

    def radial(self, u):
        return 1.0 / self.gauge(u)

    def linear_image(self, phi):
        return LinearImage(self.base, np.asarray(phi, dtype=float) @ self.phi)

    def cones(self):
        base = self.base.cones()
        return None if base is None else [c @ self._phi_inv for c in base]

    def to_dict(self):
        return {"kind": "linear_image", "matrix": self.phi.tolist(), "base": self.base.to_dict()}


def radial_Q(Q: StarBody, u) -> float | np.ndarray:
    u = np.asarray(u, dtype=float)
    vals = Q.radial(unit_vectors(u))
    return float(vals[0]) if u.ndim == 1 else vals


def gauge(Q: StarBody, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    vals = Q.gauge(x)
    return float(vals[0]) if x.ndim == 1 else vals


def transform_star(Q: StarBody, phi) -> StarBody:
    """The body ``phi Q`` for ``phi`` in SL(n)."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (Q.dim, Q.dim):
        raise ValueError(f"expected a {Q.dim}x{Q.dim} matrix")
    if abs(np.linalg.det(phi) - 1.0) > 1e-10:
        raise NotUnimodular(f"det = {np.linalg.det(phi)!r}, expected 1")
    return Q.linear_image(phi)


def star_from_dict(desc: dict, dim: int | None = None) -> StarBody:
    kind = desc.get("kind")
    if kind == "ball":
        return Ball(desc.get("radius", 1.0), desc.get("dim", dim or 2))
    if kind == "ellipsoid":
        return Ellipsoid(desc["matrix"])
    if kind == "polytope_gauge":
        return PolytopeGauge(build_hpolytope(desc["normals"], desc["offsets"]))
    if kind == "radial_table":
        return RadialTable(desc["directions"], desc["values"])
    if kind == "linear_image":
        return LinearImage(star_from_dict(desc["base"], dim), desc["matrix"])
    raise ValueError(f"unknown star body kind {kind!r}")


def check_positive(Q: StarBody, grid: np.ndarray) -> None:
    """Raise :class:`NonPositiveRadial` unless rho_Q > 0 on ``grid``."""
    vals = Q.radial(grid)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise NonPositiveRadial("radial function is not positive on the test grid")
