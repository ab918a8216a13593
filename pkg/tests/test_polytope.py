from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmk.errors import EmptyInterior, Unbounded
from dmk.polytope import (
    REL_TOL,
    DirectionWeightMeasure,
    HPolytope,
    box,
    brute_force_vertices,
    build_hpolytope,
    h_to_v,
    origin_diagnostics,
    radial_and_facet,
    radial_function,
    regular_polygon_normals,
    simplex_volume,
    support,
    validate_measure,
)

from instances import random_normals, random_polytope

SQUARE_NORMALS = np.array([[1.0, 0], [0, 1], [-1, 0], [0, -1]])
seeds = st.integers(0, 2**32 - 1)


def _same_points(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if a.shape != b.shape:
        return False
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


# -- construction -----------------------------------------------------------

def test_square_from_halfspaces():
    P = build_hpolytope(SQUARE_NORMALS, np.ones(4))
    vp = P.vpolytope()
    corners = np.array([[1.0, 1], [1, -1], [-1, 1], [-1, -1]])
    assert _same_points(vp.vertices, corners, 1e-12)
    assert vp.facet_indices == (0, 1, 2, 3)
    assert all(len(f.vertex_indices) == 2 for f in vp.facets)
    assert P.redundant == ()


def test_two_halfplanes_are_unbounded():
    with pytest.raises(Unbounded):
        build_hpolytope([[1.0, 0], [0, 1]], [1.0, 1.0])


def test_normals_on_a_half_circle_are_unbounded():
    with pytest.raises(Unbounded):
        build_hpolytope([[1.0, 0], [0, 1], [-1, 0]], [1.0, 1.0, 1.0])


def test_negative_offset_rejected():
    with pytest.raises(ValueError):
        build_hpolytope(SQUARE_NORMALS, [1.0, 1.0, -0.5, 1.0])


def test_lower_dimensional_set_is_empty_interior():
    with pytest.raises(EmptyInterior):
        build_hpolytope(SQUARE_NORMALS, [1.0, 0.0, 1.0, 0.0])
    with pytest.raises(EmptyInterior):
        box([0.0, -1.0], [0.0, 1.0])


def test_regular_hexagon_vertices():
    P = build_hpolytope(regular_polygon_normals(6), np.ones(6))
    verts = P.vpolytope().vertices
    assert len(verts) == 6
    assert np.allclose(np.linalg.norm(verts, axis=1), 2 / math.sqrt(3), atol=1e-12)


def test_cube_with_redundant_plane():
    cube = box([-1.0] * 3, [1.0] * 3)
    normals = np.vstack([cube.normals, np.ones(3) / math.sqrt(3)])
    P = build_hpolytope(normals, np.r_[cube.offsets, 10.0])
    vp = P.vpolytope()
    assert len(vp.vertices) == 8
    assert _same_points(vp.vertices, np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T
                        .astype(float), 1e-12)
    assert P.redundant == (6,)
    assert vp.facet_of(6) is None
    assert vp.facet_indices == (0, 1, 2, 3, 4, 5)


def test_four_dimensional_cross_polytope():
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * 4)).reshape(4, -1).T
    P = build_hpolytope(signs / 2.0, np.ones(16))
    vp = P.vpolytope()
    assert len(vp.vertices) == 8
    assert np.allclose(np.sort(np.abs(vp.vertices).max(axis=1)), 2.0)
    assert len(vp.facets) == 16


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_vertices_match_brute_force_in_r3(seed):
    rng = np.random.default_rng(seed)
    P = random_polytope(rng, 3, 12)
    brute = brute_force_vertices(P.normals, P.offsets)
    assert _same_points(P.vpolytope().vertices, brute, 1e-9 * P.scale)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_vertex_and_facet_invariants(seed, n):
    rng = np.random.default_rng(seed)
    P = random_polytope(rng, n)
    vp = P.vpolytope()
    tol = REL_TOL * P.scale
    assert np.all(P.normals @ vp.vertices.T <= P.offsets[:, None] + tol)
    for f in vp.facets:
        pts = vp.vertices[list(f.vertex_indices)]
        assert np.all(np.abs(pts @ P.normals[f.normal_index] - P.offsets[f.normal_index]) <= tol)
        assert np.isclose(np.sum(simplex_volume(f.simplices)), f.area, rtol=1e-12)
        assert np.all(np.abs(f.simplices.reshape(-1, n) @ P.normals[f.normal_index]
                             - P.offsets[f.normal_index]) <= tol)
    assert list(vp.facet_indices) == sorted(vp.facet_indices)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_round_trip_offsets(seed, n):
    rng = np.random.default_rng(seed)
    u = random_normals(rng, n, int(rng.integers(n + 2, 14)))
    P = build_hpolytope(u, rng.uniform(0.2, 2.0, len(u)))
    h = support(P, P.normals)
    keep = np.setdiff1d(np.arange(len(u)), P.redundant)
    assert np.all(np.abs(h[keep] - P.offsets[keep]) <= REL_TOL * P.scale)
    assert np.all(h[list(P.redundant)] < P.offsets[list(P.redundant)])


def test_facet_area_of_cube_sums_to_surface():
    vp = box([-1.0] * 3, [1.0] * 3).vpolytope()
    assert np.isclose(sum(f.area for f in vp.facets), 24.0, rtol=1e-12)


# -- support and radial functions ----------------------------------------------

def test_support_examples():
    P = box([-1.0, -1.0], [1.0, 1.0])
    assert support(P, [1.0, 0.0]) == pytest.approx(1.0, abs=1e-15)
    assert support(P, np.array([1.0, 1.0]) / math.sqrt(2)) == pytest.approx(math.sqrt(2), abs=1e-15)
    hexagon = build_hpolytope(regular_polygon_normals(6), np.ones(6))
    corner = hexagon.vpolytope().vertices[0]
    assert support(hexagon, corner / np.linalg.norm(corner)) == pytest.approx(2 / math.sqrt(3))


def test_radial_examples():
    P = build_hpolytope(SQUARE_NORMALS, np.ones(4))
    rho, idx, ties = radial_and_facet(P, np.array([1.0, 1.0]) / math.sqrt(2))
    assert rho == pytest.approx(math.sqrt(2), rel=1e-15)
    assert idx == 0 and ties == (0, 1)
    rho, idx, ties = radial_and_facet(P, [1.0, 0.0])
    assert rho == 1.0 and idx == 0 and ties == (0,)


def test_radial_is_zero_through_a_boundary_origin():
    P = build_hpolytope(SQUARE_NORMALS, [0.0, 1.0, 1.0, 1.0])
    rho, idx, _ = radial_and_facet(P, np.array([1.0, 0.3]))
    assert rho == 0.0 and idx == 0


def test_radial_function_vectorized_matches_single():
    rng = np.random.default_rng(3)
    P = random_polytope(rng, 3)
    u = rng.standard_normal((50, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rho, idx = radial_function(P, u)
    for j in range(len(u)):
        r, i, _ = radial_and_facet(P, u[j])
        assert rho[j] == pytest.approx(r, rel=1e-14) and idx[j] == i


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_radial_point_lies_inside(seed, n):
    rng = np.random.default_rng(seed)
    P = random_polytope(rng, n)
    u = rng.standard_normal((40, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = rng.standard_normal((40, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rho, idx = radial_function(P, u)
    h = support(P, v)
    lhs = rho[:, None] * (u @ v.T)
    assert np.all(lhs <= h[None, :] + 1e-12 * P.scale)
    # Equality is attained at the normal of the facet the ray hits.
    hit = rho * np.einsum("ij,ij->i", u, P.normals[idx])
    assert np.allclose(hit, support(P, P.normals[idx]), rtol=0, atol=1e-12 * P.scale)


def test_radial_matches_ray_bisection():
    rng = np.random.default_rng(11)
    for _ in range(5):
        P = random_polytope(rng, int(rng.integers(2, 4)), 8)
        u = rng.standard_normal((200, P.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        rho, _ = radial_function(P, u)
        lo = np.zeros(len(u))
        hi = np.full(len(u), 10.0 * P.scale)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = np.all((mid[:, None] * u) @ P.normals.T <= P.offsets, axis=1)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        assert np.allclose(rho, lo, rtol=0, atol=1e-9 * P.scale)


# -- hemisphere test ---------------------------------------------------------

def test_validate_measure_examples():
    assert validate_measure(SQUARE_NORMALS).valid
    bad = validate_measure([[1.0, 0], [0, 1]])
    assert not bad.valid
    assert np.allclose(bad.witness, -np.array([1.0, 1.0]) / math.sqrt(2))
    half = validate_measure([[1.0, 0], [-1, 0], [0, 1]])
    assert not half.valid
    assert np.allclose(half.witness, [0.0, -1.0])


def test_validate_accepts_measure_objects():
    mu = DirectionWeightMeasure(SQUARE_NORMALS, [1.0, 2.0, 3.0, 4.0])
    assert validate_measure(mu).valid


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3, 4]), st.integers(1, 12), st.booleans())
def test_validate_never_falsely_valid(seed, n, k, near_half):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((k, n))
    cands = rng.standard_normal((10_000, n))
    if near_half:
        # Project atoms into a closed half-space; those above it land on its boundary.
        w = rng.standard_normal(n)
        w /= np.linalg.norm(w)
        u -= np.maximum(u @ w, 0.0)[:, None] * w
        cands = np.vstack([cands, w])
    u = u[np.linalg.norm(u, axis=1) > 1e-6]
    if len(u) == 0:
        return
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    test = validate_measure(u)
    covered = np.all(u @ cands.T <= 1e-12, axis=0)
    if np.any(covered):
        assert not test.valid
    if not test.valid:
        assert np.all(u @ test.witness <= 1e-9)
        assert np.isclose(np.linalg.norm(test.witness), 1.0)


def test_measure_rejects_bad_input():
    with pytest.raises(ValueError):
        DirectionWeightMeasure(SQUARE_NORMALS, [1.0, 1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        DirectionWeightMeasure([[1.0, 0], [1.0, 1e-12]], [1.0, 1.0])
    with pytest.raises(ValueError):
        DirectionWeightMeasure(SQUARE_NORMALS, [1.0, 1.0])


def test_measure_normalizes_directions():
    mu = DirectionWeightMeasure([[2.0, 0], [0, 3], [-1, -1]], [1.0, 1.0, 1.0])
    assert np.allclose(np.linalg.norm(mu.normals, axis=1), 1.0, atol=1e-15)


# -- origin diagnostics ----------------------------------------------------------

def test_origin_diagnostics_interior_square():
    diag = origin_diagnostics(box([-1.0, -1.0], [1.0, 1.0]))
    assert diag.interior and diag.inradius_from_origin == 1.0
    assert diag.zero_offset_normals == () and not diag.Xi_flagged


def test_origin_diagnostics_boundary_box():
    P = box([-1.0, 0.0], [1.0, 2.0])
    diag = origin_diagnostics(P)
    assert not diag.interior and diag.inradius_from_origin == 0.0
    assert diag.zero_offset_normals == (3,)
    assert np.allclose(P.normals[3], [0.0, -1.0])
    assert diag.Xi_flagged


def test_origin_diagnostics_ignores_redundant_constraints():
    P = build_hpolytope(np.vstack([SQUARE_NORMALS, [[1.0, 1.0]]]), [1.0, 1.0, 1.0, 1.0, 5.0])
    assert origin_diagnostics(P).inradius_from_origin == 1.0


def test_scaled_and_linear_image():
    rng = np.random.default_rng(5)
    P = random_polytope(rng, 3)
    assert np.allclose(P.scaled(2.0).vpolytope().vertices.shape, P.vpolytope().vertices.shape)
    phi = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 1.0]])
    image = P.linear_image(phi)
    assert _same_points(image.vpolytope().vertices, P.vpolytope().vertices @ phi.T, 1e-9)


def test_hpolytope_is_lazy_and_cached():
    P = HPolytope(SQUARE_NORMALS, np.ones(4))
    assert P.vpolytope() is P.vpolytope()
    assert h_to_v(P).vertices.shape == (4, 2)
