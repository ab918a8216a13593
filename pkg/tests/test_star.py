from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmk.errors import NonPositiveRadial, NotUnimodular
from dmk.polytope import box
from dmk.sphere import circle_directions, fibonacci_sphere
from dmk.star import (
    Ball,
    Ellipsoid,
    LinearImage,
    PolytopeGauge,
    RadialTable,
    check_positive,
    gauge,
    radial_Q,
    star_from_dict,
    transform_star,
)

from instances import random_ellipsoid, random_sl, square_gauge

seeds = st.integers(0, 2**32 - 1)


def _bodies(rng, n):
    bodies = [Ball(1.7, n), random_ellipsoid(rng, n), square_gauge(n)]
    if n in (2, 3):
        bodies.append(RadialTable.from_function(lambda u: 1.0 + 0.3 * u[0] ** 2, n, 24 if n == 2 else 3))
    bodies.append(LinearImage(bodies[-1], random_sl(rng, n)))
    return bodies


def test_radial_examples():
    assert radial_Q(Ball(2.0, 3), [0.3, -0.2, 0.9]) == 2.0
    assert radial_Q(Ellipsoid(np.diag([4.0, 1.0])), [1.0, 0.0]) == pytest.approx(2.0, rel=1e-15)
    assert radial_Q(square_gauge(), np.array([1.0, 1.0]) / math.sqrt(2)) == pytest.approx(math.sqrt(2))


def test_gauge_examples():
    assert gauge(Ball(1.0), [3.0, 4.0]) == pytest.approx(5.0, rel=1e-15)
    assert gauge(Ball(2.0), [3.0, 4.0]) == pytest.approx(2.5, rel=1e-15)
    assert gauge(Ellipsoid(np.diag([4.0, 1.0])), [2.0, 0.0]) == pytest.approx(1.0, rel=1e-15)
    assert gauge(Ball(1.0), [0.0, 0.0]) == 0.0
    assert gauge(square_gauge(), [0.0, 0.0]) == 0.0


@pytest.mark.parametrize("n", [2, 3])
def test_gauge_and_radial_are_consistent(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal((1000, n)) * rng.uniform(0.1, 10.0, (1000, 1))
    r = np.linalg.norm(x, axis=1)
    for Q in _bodies(rng, n):
        lhs = Q.gauge(x) * Q.radial(x / r[:, None])
        assert np.allclose(lhs, r, rtol=1e-10, atol=0), Q.kind


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([2, 3]), st.floats(0.01, 100.0))
def test_gauge_is_positively_homogeneous(seed, n, lam):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((50, n))
    for Q in _bodies(rng, n):
        assert np.allclose(Q.gauge(lam * x), lam * Q.gauge(x), rtol=1e-12, atol=0), Q.kind


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_gauge_is_invariant_under_joint_maps(seed, n):
    rng = np.random.default_rng(seed)
    phi = random_sl(rng, n)
    x = rng.standard_normal((50, n))
    for Q in _bodies(rng, n):
        image = transform_star(Q, phi)
        assert np.allclose(image.gauge(x @ phi.T), Q.gauge(x), rtol=1e-10, atol=0), Q.kind


def test_transform_identity_and_shear():
    Q = Ball(1.0, 2)
    same = transform_star(Q, np.eye(2))
    u = circle_directions(20)
    assert np.allclose(same.radial(u), 1.0)
    shear = np.array([[1.0, 1.0], [0.0, 1.0]])
    image = transform_star(Q, shear)
    assert isinstance(image, Ellipsoid)
    assert np.allclose(image.matrix, shear @ shear.T)


def test_transform_rejects_non_unimodular():
    with pytest.raises(NotUnimodular):
        transform_star(Ball(1.0, 2), 2.0 * np.eye(2))
    with pytest.raises(ValueError):
        transform_star(Ball(1.0, 2), np.eye(3))


def test_malformed_bodies():
    with pytest.raises(NonPositiveRadial):
        Ball(0.0, 2)
    with pytest.raises(NonPositiveRadial):
        Ellipsoid(np.diag([1.0, -1.0]))
    with pytest.raises(NonPositiveRadial):
        RadialTable([[1.0, 0], [0, 1], [-1, 0]], [1.0, 0.0, 1.0])
    with pytest.raises(NonPositiveRadial):
        RadialTable([[1.0, 0], [0.0, 1.0], [-1.0, 0.1]], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        Ellipsoid([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NonPositiveRadial):
        PolytopeGauge(box([0.0, -1.0], [1.0, 1.0]))


def test_check_positive():
    grid = fibonacci_sphere(200)
    check_positive(Ball(1.0, 3), grid)
    check_positive(RadialTable.from_function(lambda u: 2.0 + u[2], 3, 2), grid)


def test_radial_table_interpolates_sampled_values():
    rng = np.random.default_rng(0)
    for n, res in ((2, 16), (3, 2)):
        table = RadialTable.from_function(lambda u: 1.0 + 0.5 * u[0] ** 2, n, res)
        assert np.allclose(table.radial(table.directions), table.values, rtol=1e-12)
        u = rng.standard_normal((300, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        vals = table.radial(u)
        assert np.all(vals >= table.values.min() - 1e-12)
        assert np.all(vals <= table.values.max() + 1e-12)


def test_radial_table_converges_to_function():
    f = lambda u: 1.0 + 0.3 * u[..., 0] ** 2  # noqa: E731
    u = fibonacci_sphere(500)
    errs = []
    for res in (2, 4, 8):
        table = RadialTable.from_function(f, 3, res)
        errs.append(np.max(np.abs(table.radial(u) - f(u))))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("n", [2, 3])
def test_cones_cover_space_and_gauge_is_linear_on_each(n):
    rng = np.random.default_rng(7)
    x = rng.standard_normal((400, n))
    for Q in _bodies(rng, n):
        cones = Q.cones()
        if cones is None:
            assert Q.kind in ("ball", "ellipsoid")
            continue
        member = np.stack([np.all(x @ c.T >= -1e-12, axis=1) for c in cones])
        assert np.all(member.any(axis=0)), Q.kind
        if Q.kind == "polytope_gauge":
            for c, inside in zip(cones, member):
                pts = x[inside]
                if len(pts) > n:
                    coef, *_ = np.linalg.lstsq(pts, Q.gauge(pts), rcond=None)
                    assert np.allclose(pts @ coef, Q.gauge(pts), rtol=1e-10)


@pytest.mark.parametrize("desc", [
    {"kind": "ball", "radius": 2.0},
    {"kind": "ellipsoid", "matrix": [[2.0, 0.3], [0.3, 1.0]]},
    {"kind": "polytope_gauge", "normals": [[1, 0], [0, 1], [-1, 0], [0, -1]], "offsets": [1, 2, 1, 2]},
    {"kind": "radial_table", "directions": [[1, 0], [0, 1], [-1, 0], [0, -1]], "values": [1, 2, 1, 2]},
])
def test_descriptor_round_trip(desc):
    Q = star_from_dict(desc, 2)
    again = star_from_dict(Q.to_dict(), 2)
    u = circle_directions(50)
    assert np.allclose(Q.radial(u), again.radial(u), rtol=1e-14)
    image = LinearImage(Q, [[1.0, 0.5], [0.0, 1.0]])
    assert np.allclose(star_from_dict(image.to_dict(), 2).radial(u), image.radial(u), rtol=1e-14)


def test_unknown_descriptor():
    with pytest.raises(ValueError):
        star_from_dict({"kind": "torus"}, 2)
