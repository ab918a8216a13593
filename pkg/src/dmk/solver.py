"""Variational solver for the discrete L_p dual Minkowski problem.

Given atoms ``alpha_i`` at normals ``u_i``, the normalized problem maximizes
``Psi(z) = V_q(P(z), Q)`` over ``Z = {z >= 0 : sum alpha_i z_i^p = 1}`` where
``P(z) = {x : <x, u_i> <= z_i}``.  At a maximizer every ``u_i`` carries a
facet, the origin is interior, and the Lagrange condition reads

    C_q(P, Q, {u_i}) / (alpha_i z_i^p) = V_q(P, Q)      for all i,

which is exactly ``V_q(P,Q)^{-1} C_{p,q}(P,Q,.) = mu``.  Rescaling by
``V_q(P)^{-1/(q-p)}`` then solves ``C_{p,q}(P,Q,.) = mu`` when ``p != q``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDensity,
    DmkError,
    FacetCollapse,
    GeometryError,
    MeasureOnHemisphere,
    NotConverged,
    PEqualsQ,
    QuadratureNotConverged,
)
from .measures import DualMeasureResult, dual_curvature_measure
from .polytope import (
    DirectionWeightMeasure,
    Facet,
    HPolytope,
    OriginDiagnostics,
    VPolytope,
    h_to_v,
    origin_diagnostics,
    support,
    validate_measure,
)
from .quadrature import grundmann_moeller
from .sphere import circle_directions, grid_directions, icosphere_cells
from .star import Ball, StarBody

log = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    max_iters: int = 2000
    grad_tol: float = 1e-8
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    offset_floor: float = 1e-10
    rtol: float = 1e-9
    seed: int = 0
    # "lbfgs" and "scaled" work in log-offsets, the latter stepping along the
    # measure residual; "euclidean" projects the plain gradient onto {Phi = 1}.
    metric: str = "lbfgs"
    history: int = 10
    collapse_patience: int = 50

    def __post_init__(self):
        for name in ("max_iters", "grad_tol", "armijo_c", "armijo_shrink", "offset_floor",
                     "rtol", "collapse_patience", "history"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.grad_tol < 1:
            raise ValueError("grad_tol must be < 1")
        if not self.armijo_shrink < 1 or not self.armijo_c < 1:
            raise ValueError("Armijo parameters must lie in (0, 1)")
        if self.metric not in ("lbfgs", "scaled", "euclidean"):
            raise ValueError("metric must be 'lbfgs', 'scaled' or 'euclidean'")


@dataclass
class SolveReport:
    iterations: int = 0
    objective_trace: list[float] = field(default_factory=list)
    kkt_residual: float = math.inf
    lagrange_lambda: float = math.nan
    lambda0: float = math.nan
    final_rescale: float = 1.0
    residuals: np.ndarray | None = None
    origin: OriginDiagnostics | None = None
    warnings: list[str] = field(default_factory=list)
    converged: bool = False
    seed: int = 0
    runtime: float = 0.0
    redundancy_band_active: bool = False

    @property
    def max_residual(self) -> float:
        if self.residuals is None or len(self.residuals) == 0:
            return math.inf
        return float(np.max(self.residuals))

    def to_dict(self) -> dict:
        origin = None
        if self.origin is not None:
            origin = {
                "interior": bool(self.origin.interior),
                "inradius_from_origin": float(self.origin.inradius_from_origin),
                "zero_offset_normals": list(self.origin.zero_offset_normals),
                "Xi_flagged": bool(self.origin.Xi_flagged),
            }
        return {
            "iterations": self.iterations,
            "objective_trace": [float(v) for v in self.objective_trace],
            "kkt_residual": float(self.kkt_residual),
            "lagrange_lambda": float(self.lagrange_lambda),
            "lambda0": float(self.lambda0),
            "final_rescale": float(self.final_rescale),
            "residuals": None if self.residuals is None else [float(r) for r in self.residuals],
            "max_residual": self.max_residual,
            "origin": origin,
            "warnings": list(self.warnings),
            "converged": bool(self.converged),
            "seed": int(self.seed),
            "runtime": float(self.runtime),
            "redundancy_band_active": bool(self.redundancy_band_active),
        }


def _scaled_polytope(P: HPolytope, factor: float) -> HPolytope:
    """``factor * P`` reusing the cached vertex data."""
    vp = P.vpolytope()
    d = P.dim - 1
    facets = tuple(
        Facet(f.normal_index, f.vertex_indices, f.simplices * factor, f.area * factor**d)
        for f in vp.facets
    )
    scaled = VPolytope(vp.vertices * factor, facets, vp.scale * factor)
    return HPolytope(P.normals, P.offsets * factor, P.redundant, scaled)


def _polytope(normals: np.ndarray, z: np.ndarray) -> HPolytope:
    """P(z) for normals already known to positively span the space."""
    P = HPolytope(normals, z)
    P.vpolytope()
    return P


def _with_offsets(P: HPolytope, z: np.ndarray) -> HPolytope:
    # Same point set, tighter description: the vertex data carries over.
    return HPolytope(P.normals, z, (), P.vpolytope())


class _Problem:
    """Objective bookkeeping for one normalized solve."""

    def __init__(self, mu: DirectionWeightMeasure, Q: StarBody, p: float, q: float,
                 opts: SolveOptions):
        self.normals = mu.normals
        self.alpha = mu.weights
        self.Q = Q
        self.p = p
        self.q = q
        self.opts = opts
        self.evaluations = 0

    def phi(self, z: np.ndarray) -> float:
        return float(np.sum(self.alpha * z**self.p))

    def normalize(self, z: np.ndarray) -> np.ndarray:
        return z / self.phi(z) ** (1.0 / self.p)

    def evaluate(self, z: np.ndarray):
        """Snap ``z`` to the support function, renormalize, and measure.

        Returns ``(z, P, measure)`` with ``z`` tight and on ``Z``.
        """
        self.evaluations += 1
        P = _polytope(self.normals, z)
        h = support(P, self.normals)
        # Rounding can push h slightly negative when o sits on the boundary.
        snapped = np.minimum(z, np.maximum(h, self.opts.offset_floor * np.max(z)))
        c = self.phi(snapped) ** (-1.0 / self.p)
        z_new = snapped * c
        P = _scaled_polytope(_with_offsets(P, snapped), c)
        m = dual_curvature_measure(P, self.Q, self.q, rtol=self.opts.rtol)
        return z_new, P, m

    def residual(self, z: np.ndarray, m: DualMeasureResult) -> np.ndarray:
        """Relative error of the normalized measure, ``C_i/(alpha_i z_i^p V) - 1``."""
        return m.per_normal_Cq / (self.alpha * z**self.p * m.Vq) - 1.0

    def euclidean_direction(self, z: np.ndarray, m: DualMeasureResult) -> np.ndarray:
        """Gradient of Psi projected onto the tangent plane of ``{Phi = 1}``."""
        grad = self.q * m.per_normal_Cq / z
        a = self.p * self.alpha * z ** (self.p - 1)
        return grad - (grad @ a) / (a @ a) * a

    def log_gradient(self, z: np.ndarray, m: DualMeasureResult) -> np.ndarray:
        """Gradient of ``Psi * Phi^(-q/p)`` in ``log z`` at a point with ``Phi(z) = 1``.

        It is orthogonal to the all-ones vector, the direction of pure scaling.
        """
        return self.q * (m.per_normal_Cq - m.Vq * self.alpha * z**self.p)

    def free_gradient(self, z: np.ndarray, m: DualMeasureResult) -> np.ndarray:
        """Gradient of ``Psi * Phi^(-q/p)`` at a point with ``Phi(z) = 1``."""
        return self.q / z * (m.per_normal_Cq - m.Vq * self.alpha * z**self.p)


# Relative size below which differences of Psi are treated as rounding noise.
NOISE_LEVEL = 1e-12
BB_RANGE = 1e3
MAX_BACKTRACKS = 60


class _Memory:
    """Limited-memory BFGS pairs for maximizing a function of ``log z``."""

    def __init__(self, size: int):
        self.size = size
        self.pairs: list[tuple[np.ndarray, np.ndarray, float]] = []

    def __len__(self) -> int:
        return len(self.pairs)

    def clear(self) -> None:
        self.pairs.clear()

    def push(self, s: np.ndarray, y: np.ndarray) -> None:
        # y is the decrease of the gradient; ascent on a concave model needs s.y > 0.
        # A failing pair means the step crossed a kink (a facet appearing or
        # vanishing), so the stored curvature no longer describes the objective.
        sy = float(s @ y)
        if not sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            self.clear()
            return
        self.pairs.append((s, y, 1.0 / sy))
        if len(self.pairs) > self.size:
            self.pairs.pop(0)

    def apply(self, grad: np.ndarray, scale: np.ndarray) -> np.ndarray:
        """Two-loop recursion with initial metric ``gamma * diag(scale)``."""
        v = grad.copy()
        coef = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(s @ v)
            v -= a * y
            coef.append(a)
        if self.pairs:
            s, y, _ = self.pairs[-1]
            gamma = float(s @ y) / float(y @ (scale * y))
        else:
            gamma = 1.0
        v = gamma * scale * v
        for (s, y, rho), a in zip(self.pairs, reversed(coef)):
            b = rho * float(y @ v)
            v += (a - b) * s
        return v


def _sufficient_ascent(prob: _Problem, z, m: DualMeasureResult, z_t, m_t: DualMeasureResult,
                       required: float) -> bool:
    """Armijo test, with a gradient-based gain estimate once gains reach rounding level.

    Near the maximizer the increase of Psi drops below what double precision
    resolves: an atom of relative error r and weight w moves Psi by about
    w r^2.  Once the raw difference is within ``NOISE_LEVEL * Psi`` it is
    replaced by the trapezoid estimate of the gain of the scale-free objective
    ``Psi * Phi^(-q/p)``, whose log-gradient is orthogonal to the scaling
    direction and therefore blind to the rounding left by renormalization.
    Stored values of Psi can then dip by a few ulps.
    """
    gain = m_t.Vq - m.Vq
    if gain >= required:
        return True
    if abs(gain) > NOISE_LEVEL * abs(m.Vq):
        return False
    estimate = 0.5 * float((prob.log_gradient(z, m) + prob.log_gradient(z_t, m_t))
                           @ (np.log(z_t) - np.log(z)))
    return estimate >= required


def lagrange_multiplier(z, alpha, cq, p) -> float:
    """Least-squares ``lam`` in ``lam * C_i / z_i = alpha_i z_i^(p-1)`` (relative misfit)."""
    ratio = (cq / z) / (alpha * z ** (p - 1))
    return float(np.sum(ratio) / np.sum(ratio**2))


def kkt_certificate(z, alpha, cq, p) -> float:
    lam = lagrange_multiplier(z, alpha, cq, p)
    target = alpha * z ** (p - 1)
    return float(np.max(np.abs(lam * cq / z - target) / target))


def _check_exponents(p: float, q: float) -> None:
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not q > 0:
        raise ValueError("q must be positive")


def solve_normalized(mu: DirectionWeightMeasure, Q: StarBody, p: float, q: float,
                     opts: SolveOptions | None = None,
                     z0: np.ndarray | None = None) -> tuple[HPolytope, SolveReport]:
    """Find ``P0`` with ``V_q(P0,Q)^{-1} C_{p,q}(P0,Q,.) = mu`` (``p = q`` allowed).

    ``z0`` optionally replaces the uniform starting offsets; it is rescaled
    onto ``{Phi = 1}``.
    """
    opts = opts or SolveOptions()
    _check_exponents(p, q)
    if Q.dim != mu.dim:
        raise ValueError("star body and measure live in different dimensions")
    test = validate_measure(mu)
    if not test.valid:
        raise MeasureOnHemisphere("measure is concentrated on a closed hemisphere", test.witness)

    start = time.perf_counter()
    prob = _Problem(mu, Q, p, q, opts)
    report = SolveReport(seed=opts.seed)
    if z0 is None:
        z0 = np.full(len(mu), prob.phi(np.ones(len(mu))) ** (-1.0 / p))
    else:
        z0 = np.asarray(z0, dtype=float).reshape(-1)
        if z0.shape != (len(mu),) or not np.all(z0 > 0):
            raise ValueError("z0 needs one positive offset per atom")
        z0 = prob.normalize(z0)
    z, P, m = prob.evaluate(z0)
    report.objective_trace.append(m.Vq)
    res = prob.residual(z, m)
    kkt = float(np.max(np.abs(res)))

    memory = _Memory(opts.history)
    tau = None
    prev = None  # (log z, log-gradient) of the previous iterate
    floor_streak = 0
    stalled = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        if kkt <= opts.grad_tol:
            it -= 1
            break
        grad = prob.log_gradient(z, m)
        if opts.metric == "euclidean":
            dz = prob.euclidean_direction(z, m)
            step = dz / z
        else:
            scale = 1.0 / (prob.q * m.Vq * prob.alpha * z**p)
            step = memory.apply(grad, scale) if opts.metric == "lbfgs" else scale * grad
        slope = float(grad @ step)
        if not slope > 0:
            memory.clear()
            step = scale * grad if opts.metric != "euclidean" else step
            slope = float(grad @ step)
            if not slope > 0:
                stalled = True
                break
        step_cap = 1.0 / max(float(np.max(np.abs(step))), 1e-300)
        if opts.metric == "scaled" and prev is not None:
            ds = np.log(z) - prev[0]
            dy = step - prev[1]
            sy = float(ds @ dy)
            # Barzilai-Borwein step, kept within a bounded factor of the last one.
            bb = -float(ds @ ds) / sy if sy < 0 else 2.0 * tau
            tau = min(max(bb, tau / BB_RANGE), tau * BB_RANGE)
        elif opts.metric == "lbfgs" or tau is None:
            tau = 1.0 if len(memory) else 0.5
        tau = min(tau, step_cap)

        accepted = False
        for _ in range(MAX_BACKTRACKS):
            if opts.metric == "euclidean":
                trial = np.maximum(z + tau * dz, opts.offset_floor * np.max(z))
            else:
                trial = z * np.exp(tau * step)
            trial = np.maximum(trial, opts.offset_floor * np.max(trial))
            trial = prob.normalize(trial)
            try:
                z_t, P_t, m_t = prob.evaluate(trial)
            except (GeometryError, QuadratureNotConverged) as exc:
                log.debug("trial step rejected: %s", exc)
                tau *= opts.armijo_shrink
                continue
            if _sufficient_ascent(prob, z, m, z_t, m_t, opts.armijo_c * tau * slope):
                accepted = True
                break
            tau *= opts.armijo_shrink
        if not accepted:
            stalled = True
            break
        memory.push(np.log(z_t) - np.log(z), grad - prob.log_gradient(z_t, m_t))
        prev = (np.log(z), step)
        z, P, m = z_t, P_t, m_t
        report.objective_trace.append(m.Vq)
        res = prob.residual(z, m)
        kkt = float(np.max(np.abs(res)))

        if np.min(z) <= opts.offset_floor * np.max(z) * (1 + 1e-12):
            floor_streak += 1
            if floor_streak > opts.collapse_patience:
                report.iterations = it
                _finish(report, prob, z, P, m, start)
                raise FacetCollapse(
                    f"an offset stayed at offset_floor for {opts.collapse_patience} accepted "
                    f"steps (KKT residual {report.kkt_residual:.3e})", P, report)
        else:
            floor_streak = 0

    report.iterations = it
    _finish(report, prob, z, P, m, start)
    if report.kkt_residual <= opts.grad_tol:
        report.converged = True
        return P, report
    if stalled:
        report.warnings.append(
            f"line search stalled at KKT residual {report.kkt_residual:.3e}")
    pinned = np.flatnonzero(z <= opts.offset_floor * np.max(z) * (1 + 1e-12))
    if len(pinned):
        raise FacetCollapse(
            f"offsets {pinned.tolist()} pinned at offset_floor with KKT residual "
            f"{report.kkt_residual:.3e}: the maximizer's smallest offsets lie below "
            f"{opts.offset_floor:.0e} x scale", P, report)
    raise NotConverged(
        f"KKT residual {report.kkt_residual:.3e} above {opts.grad_tol:.1e} after "
        f"{report.iterations} iterations", P, report)


def _finish(report: SolveReport, prob: _Problem, z, P: HPolytope, m: DualMeasureResult,
            start: float) -> None:
    res = prob.residual(z, m)
    report.kkt_residual = float(np.max(np.abs(res)))
    report.lagrange_lambda = lagrange_multiplier(z, prob.alpha, m.per_normal_Cq, prob.p)
    # alpha_i = lam C_i z_i^{-p} and alpha_i = l0^{-p} V^{-1} C_i z_i^{-p} give l0 = (lam V)^{-1/p}.
    report.lambda0 = float((report.lagrange_lambda * m.Vq) ** (-1.0 / prob.p))
    report.residuals = np.abs(res)
    report.origin = origin_diagnostics(P)
    vp = P.vpolytope()
    missing = sorted(set(range(len(z))) - set(vp.facet_indices))
    if missing:
        report.warnings.append(f"normals without facets: {missing}")
    report.redundancy_band_active = bool(missing)
    report.runtime = time.perf_counter() - start


def rescale_solution(P0: HPolytope, Q: StarBody, p: float, q: float,
                     rtol: float = 1e-9) -> tuple[HPolytope, float]:
    """``(lam P0, lam)`` with ``lam = V_q(P0,Q)^{-1/(q-p)}``."""
    if p == q:
        raise PEqualsQ("rescaling is undefined for p = q; use the normalized solution")
    vq = dual_curvature_measure(P0, Q, q, rtol=rtol).Vq
    lam = vq ** (-1.0 / (q - p))
    return _scaled_polytope(P0, lam), float(lam)


def solve(mu: DirectionWeightMeasure, Q: StarBody, p: float, q: float,
          opts: SolveOptions | None = None) -> tuple[HPolytope, SolveReport]:
    """Polytope ``P`` with ``C_{p,q}(P, Q, .) = mu``."""
    opts = opts or SolveOptions()
    _check_exponents(p, q)
    if p == q:
        raise PEqualsQ("p = q has only the normalized solution")
    P0, report = solve_normalized(mu, Q, p, q, opts)
    P, lam = rescale_solution(P0, Q, p, q, rtol=opts.rtol)
    report.final_rescale = lam
    m = dual_curvature_measure(P, Q, q, p, rtol=opts.rtol)
    report.residuals = np.abs(m.per_normal_Cpq - mu.weights) / mu.weights
    report.origin = origin_diagnostics(P)
    return P, report


# -- densities -------------------------------------------------------------

def _arc_cells(m: int, func) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(16)
    edges = 2 * math.pi * np.arange(m + 1) / m
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    theta = mid[:, None] + half[:, None] * x[None, :]
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1).reshape(-1, 2)
    vals = np.asarray(func(pts), dtype=float).reshape(m, -1)
    mass = half * (vals @ w)
    return circle_directions(m, phase=math.pi / m), mass, 2 * half


def _sphere_cells(freq: int, func) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tris, planes = icosphere_cells(freq)
    # Split every cell four ways twice before applying the degree-7 rule.
    sub = tris
    owner = np.arange(len(tris))
    for _ in range(2):
        a, b, c = sub[:, 0], sub[:, 1], sub[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        sub = np.concatenate([np.stack(t, axis=1) for t in
                              ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
        owner = np.tile(owner, 4)
    bary, w = grundmann_moeller(2, 7)
    pts = np.matmul(bary, sub)  # (s, m, 3)
    r = np.linalg.norm(pts, axis=2)
    u = pts / r[..., None]
    height = np.einsum("sn,sn->s", sub[:, 0], planes[owner])
    area = 0.5 * np.linalg.norm(np.cross(sub[:, 1] - sub[:, 0], sub[:, 2] - sub[:, 0]), axis=1)
    jac = height[:, None] / r**3
    vals = np.asarray(func(u.reshape(-1, 3)), dtype=float).reshape(u.shape[:2])
    mass = np.bincount(owner, weights=area * ((vals * jac) @ w), minlength=len(tris))
    cell_area = np.bincount(owner, weights=area * (jac @ w), minlength=len(tris))
    cent = np.zeros((len(tris), 3))
    for j in range(3):
        cent[:, j] = np.bincount(owner, weights=area * ((u[..., j] * jac) @ w),
                                 minlength=len(tris))
    cent /= np.linalg.norm(cent, axis=1, keepdims=True)
    return cent, mass, cell_area


def sphere_cells(dim: int, resolution: int, func):
    """``(directions, integral of func per cell, cell areas)`` of a sphere partition.

    In the plane ``resolution`` arcs of equal length are used; on S^2 the
    cells are the radially projected triangles of an icosahedron whose faces
    are split ``resolution`` times along each edge.
    """
    if dim == 2:
        return _arc_cells(resolution, func)
    if dim == 3:
        return _sphere_cells(resolution, func)
    raise NotImplementedError("density discretization supports n = 2, 3")


def discretize_density(f, dim: int, resolution: int) -> DirectionWeightMeasure:
    """Discrete measure with one atom per cell carrying the cell's f-mass."""
    dirs, mass, _ = sphere_cells(dim, resolution, f)
    if np.any(mass < -1e-14 * np.max(np.abs(mass))):
        raise ValueError("density must be nonnegative")
    keep = mass > 1e-14 * max(float(np.max(mass)), 1e-300)
    if not np.any(keep):
        raise DegenerateDensity("density vanishes on every cell")
    mu_dirs, mu_mass = dirs[keep], mass[keep]
    test = validate_measure(mu_dirs) if len(mu_dirs) > dim else None
    if test is None or not test.valid:
        raise DegenerateDensity("discretized density is concentrated on a closed hemisphere",
                                None if test is None else test.witness)
    return DirectionWeightMeasure(mu_dirs, mu_mass)


def support_distance(P: HPolytope, other, directions: np.ndarray) -> float:
    """Sup over ``directions`` of ``|h_P - h_other|``; ``other`` may be a ball."""
    hp = support(P, directions)
    if isinstance(other, Ball):
        ho = np.full(len(directions), other.radius)
    else:
        ho = support(other, directions)
    return float(np.max(np.abs(hp - ho)))


@dataclass
class DensitySolution:
    resolutions: list[int]
    polytopes: list[HPolytope]
    reports: list[SolveReport]
    successive_distances: list[float]
    monge_ampere_residuals: list[float | None]

    def summary(self) -> dict:
        return {
            "resolutions": list(self.resolutions),
            "successive_distances": list(self.successive_distances),
            "monge_ampere_residuals": list(self.monge_ampere_residuals),
            "origin_interior": [bool(r.origin.interior) for r in self.reports],
            "max_residuals": [r.max_residual for r in self.reports],
        }


def monge_ampere_residual(P: HPolytope, Q: StarBody, p: float, q: float, f, dim: int,
                          resolution: int, rtol: float = 1e-9) -> float:
    """Cellwise weak residual of ``det(D^2 h + h I) = n h^{p-1} |x|^{n-q} f``.

    Integrated over the normal cell of facet ``F_i`` the left side is the facet
    area; the right side, with the density sampled at the cell direction,
    becomes ``h_i^p f(u_i) |cell_i| area_i / C_q(P,Q,{u_i})``.  Returns the
    largest relative gap over the cells.
    """
    dirs, _, areas = sphere_cells(dim, resolution, lambda u: np.ones(len(u)))
    m = dual_curvature_measure(P, Q, q, rtol=rtol)
    fvals = np.asarray(f(dirs), dtype=float)
    vp = P.vpolytope()
    worst = 0.0
    for facet in vp.facets:
        i = facet.normal_index
        j = int(np.argmax(dirs @ P.normals[i]))
        if m.per_normal_Cq[i] <= 0:
            continue
        rhs = P.offsets[i] ** p * fvals[j] * areas[j] * facet.area / m.per_normal_Cq[i]
        worst = max(worst, abs(facet.area - rhs) / facet.area)
    return worst


def solve_density(f, dim: int, Q: StarBody, p: float, q: float, resolutions,
                  opts: SolveOptions | None = None) -> DensitySolution:
    """Solve successive discretizations of ``f dH^{n-1}`` and track convergence."""
    resolutions = [int(r) for r in resolutions]
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must increase")
    polys, reports, ma = [], [], []
    for res in resolutions:
        mu = discretize_density(f, dim, res)
        P, report = solve(mu, Q, p, q, opts)
        polys.append(P)
        reports.append(report)
        if isinstance(Q, Ball):
            ma.append(monge_ampere_residual(P, Q, p, q, f, dim, res,
                                            rtol=(opts or SolveOptions()).rtol))
        else:
            ma.append(None)
    grid = grid_directions(dim)
    dists = [support_distance(a, b, grid) for a, b in zip(polys, polys[1:])]
    return DensitySolution(resolutions, polys, reports, dists, ma)
