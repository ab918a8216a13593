"""Dual intrinsic volumes and (L_p) dual curvature measures of polytopes.

For a polytope ``P`` containing the origin the q-th dual curvature measure
with respect to a star body ``Q`` is atomic on the facet normals, with atom

    C_q(P, Q, {u_i}) = (1/n) * t_i * integral over F_i of ||x||_Q^(q-n)

where ``F_i`` is the facet with normal ``u_i`` and ``t_i = h_P(u_i)``.  Facets
through the origin carry no mass.  The L_p version reweights atoms by
``t_i^(-p)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TightnessViolated
from .polytope import REL_TOL, HPolytope, support

# Offsets at or below this fraction of the polytope's scale count as facets
# through the origin.  Far below REL_TOL: optimal offsets for p near 1 can be tiny.
ZERO_OFFSET = 1e-14
from .quadrature import integrate_simplices
from .sphere import ball_volume
from .star import Ball, StarBody, transform_star

DEFAULT_RTOL = 1e-9


@dataclass(frozen=True)
class DualMeasureResult:
    per_normal_Cq: np.ndarray
    # NaN marks atoms at facets through the origin, where h^{-p} is undefined.
    per_normal_Cpq: np.ndarray
    Vq: float
    quadrature_error_estimate: np.ndarray
    q: float
    p: float

    @property
    def normalized_Cpq(self) -> np.ndarray:
        return self.per_normal_Cpq / self.Vq


def _gauge_power(Q: StarBody, expo: float):
    def f(x):
        return Q.gauge(x) ** expo
    return f


def _clip_polygon(poly: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Part of a planar convex polygon (rows in R^n) with ``<x, c> >= 0``."""
    vals = poly @ c
    if np.all(vals >= 0):
        return poly
    if np.all(vals <= 0):
        return poly[:0]
    out = []
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        va, vb = vals[i], vals[(i + 1) % m]
        if va >= 0:
            out.append(a)
        if (va < 0) != (vb < 0):
            out.append(a + (b - a) * (va / (va - vb)))
    return np.array(out)


def split_by_cones(simplices: np.ndarray, owners: np.ndarray, cones: list[np.ndarray]):
    """Cut facet simplices along the cones on which a gauge is smooth.

    Handles segments (n=2) and triangles (n=3); other dimensions are returned
    unchanged and left to adaptive refinement.
    """
    s, d1, n = simplices.shape
    if n not in (2, 3) or not cones:
        return simplices, owners
    # Prefilter: a cone misses a simplex if one halfspace excludes all its vertices.
    cand = []
    for j, c in enumerate(cones):
        vals = np.einsum("svn,mn->smv", simplices, c)
        hit = ~np.any(np.all(vals < 0, axis=2), axis=1)
        cand.append(np.flatnonzero(hit))
    pieces, new_owners = [], []
    for j, c in enumerate(cones):
        for i in cand[j]:
            simplex = simplices[i]
            if n == 2:
                a, b = simplex
                lo, hi = 0.0, 1.0
                for row in c:
                    va, vb = a @ row, b @ row
                    if va < 0 and vb < 0:
                        lo, hi = 1.0, 0.0
                        break
                    if va < 0:
                        lo = max(lo, va / (va - vb))
                    elif vb < 0:
                        hi = min(hi, va / (va - vb))
                if hi - lo > 1e-14:
                    pieces.append(np.stack([a + lo * (b - a), a + hi * (b - a)]))
                    new_owners.append(owners[i])
                continue
            poly = simplex
            for row in c:
                poly = _clip_polygon(poly, row)
                if len(poly) < 3:
                    break
            if len(poly) < 3:
                continue
            area0 = np.linalg.norm(np.cross(simplex[1] - simplex[0], simplex[2] - simplex[0]))
            for t in range(1, len(poly) - 1):
                tri = np.stack([poly[0], poly[t], poly[t + 1]])
                if np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) > 1e-14 * area0:
                    pieces.append(tri)
                    new_owners.append(owners[i])
    if not pieces:
        return simplices[:0], owners[:0]
    return np.array(pieces), np.array(new_owners, dtype=int)


def facet_integral(simplices, v, h: float, Q: StarBody, q: float,
                   rtol: float = DEFAULT_RTOL) -> tuple[float, float]:
    """``(1/n) h int_F ||x||_Q^(q-n) dH^{n-1}`` over a triangulated facet.

    Returns ``(value, error_estimate)``.
    """
    simplices = np.asarray(simplices, dtype=float)
    n = simplices.shape[-1]
    if q <= 0:
        raise ValueError("q must be positive")
    if h <= 0:
        raise ValueError("facet must have positive offset")
    v = np.asarray(v, dtype=float)
    if np.max(np.abs(simplices.reshape(-1, n) @ v - h)) > 1e-8 * max(h, 1.0):
        raise ValueError("facet does not lie in the hyperplane <x, v> = h")
    groups = np.zeros(len(simplices), dtype=int)
    simplices, groups = split_by_cones(simplices, groups, Q.cones())
    val, err = integrate_simplices(_gauge_power(Q, q - n), simplices, groups, 1, rtol=rtol)
    return float(h * val[0] / n), float(h * err[0] / n)


def dual_curvature_measure(P: HPolytope, Q: StarBody, q: float, p: float = 0.0,
                           rtol: float = DEFAULT_RTOL) -> DualMeasureResult:
    """Atoms of C_q(P,Q,.) and C_{p,q}(P,Q,.) at every normal of ``P``."""
    if q <= 0:
        raise ValueError("q must be positive")
    vp = P.vpolytope()
    k, n = P.normals.shape
    offsets = P.offsets
    zero_band = ZERO_OFFSET * vp.scale
    cq = np.zeros(k)
    err = np.zeros(k)

    live = [f for f in vp.facets if offsets[f.normal_index] > zero_band]
    if q == n:
        for f in live:
            cq[f.normal_index] = offsets[f.normal_index] * f.area / n
    elif live:
        simplices = np.concatenate([f.simplices for f in live])
        owner = np.concatenate([np.full(len(f.simplices), j) for j, f in enumerate(live)])
        simplices, owner = split_by_cones(simplices, owner, Q.cones())
        vals, errs = integrate_simplices(_gauge_power(Q, q - n), simplices, owner, len(live),
                                         rtol=rtol)
        for j, f in enumerate(live):
            t = offsets[f.normal_index]
            cq[f.normal_index] = t * vals[j] / n
            err[f.normal_index] = t * errs[j] / n

    cpq = np.full(k, np.nan)
    pos = offsets > zero_band
    if p == 0:
        cpq = cq.copy()
    else:
        cpq[pos] = offsets[pos] ** (-p) * cq[pos]
    return DualMeasureResult(cq, cpq, float(np.sum(cq)), err, float(q), float(p))


def dual_intrinsic_volume(P, Q: StarBody, q: float, rtol: float = DEFAULT_RTOL) -> float:
    """``V_q(P, Q)``; a :class:`Ball` body with a ball ``Q`` uses the closed form."""
    if isinstance(P, Ball):
        if not isinstance(Q, Ball):
            raise TypeError("closed form only available when both bodies are balls")
        n = P.dim
        return ball_volume(n) * P.radius**q * Q.radius ** (n - q)
    return dual_curvature_measure(P, Q, q, rtol=rtol).Vq


def vq_gradient(P: HPolytope, Q: StarBody, q: float, rtol: float = DEFAULT_RTOL,
                measure: DualMeasureResult | None = None) -> np.ndarray:
    """Gradient of ``z -> V_q(P(z), Q)`` at the offsets of ``P``.

    Component ``i`` is ``q C_q(P,Q,{u_i}) / z_i``; normals whose face is not a
    facet contribute zero.  Offsets must be tight support values.
    """
    z = P.offsets
    if np.any(z <= 0):
        raise ValueError("gradient requires strictly positive offsets")
    h = support(P, P.normals)
    band = REL_TOL * P.scale
    loose = np.flatnonzero(z > h + band)
    if len(loose):
        raise TightnessViolated(f"offsets {loose.tolist()} exceed the support function")
    if measure is None:
        measure = dual_curvature_measure(P, Q, q, rtol=rtol)
    return q * measure.per_normal_Cq / z


def sl_equivariance_residual(P: HPolytope, Q: StarBody, q: float, phi,
                             rtol: float = DEFAULT_RTOL) -> float:
    """Max relative gap between atoms of C_q(phi P, phi Q) and pushed-forward atoms.

    The pushforward maps ``u -> phi^{-T} u / |phi^{-T} u|``, which keeps the
    atom index, so the comparison is index-wise.  The total mass is included.
    """
    phi = np.asarray(phi, dtype=float)
    q_img = transform_star(Q, phi)
    p_img = P.linear_image(phi)
    base = dual_curvature_measure(P, Q, q, rtol=rtol)
    image = dual_curvature_measure(p_img, q_img, q, rtol=rtol)
    ref = np.maximum(np.abs(base.per_normal_Cq), base.Vq * 1e-300)
    gaps = np.abs(image.per_normal_Cq - base.per_normal_Cq)
    atom_rel = np.where(base.per_normal_Cq > 0, gaps / ref, gaps / base.Vq)
    total_rel = abs(image.Vq - base.Vq) / base.Vq
    return float(max(np.max(atom_rel), total_rel))
