from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from dmk.measures import dual_curvature_measure
from dmk.oracle import McEstimate, mc_dual_curvature, mc_dual_intrinsic_volume, sphere_block
from dmk.polytope import box
from dmk.star import Ball

from instances import random_ellipsoid, random_polytope, square

VQ3_SQUARE = 4 * 0.5 * (math.sqrt(2) + math.asinh(1.0))


def test_ball_and_square_totals():
    disc = mc_dual_intrinsic_volume(Ball(1.0, 2), Ball(1.0, 2), 2.0, N=10_000, seed=1)
    assert disc.within(math.pi)
    assert mc_dual_intrinsic_volume(square(), Ball(1.0), 2.0, N=200_000, seed=2).within(4.0)
    assert mc_dual_intrinsic_volume(square(), Ball(1.0), 3.0, N=200_000, seed=3).within(VQ3_SQUARE)


def test_square_and_box_atoms():
    atoms = mc_dual_curvature(square(), Ball(1.0), 2.0, N=200_000, seed=4)
    assert all(a.within(1.0) for a in atoms)
    atoms = mc_dual_curvature(box([-1.0, 0.0], [1.0, 2.0]), Ball(1.0), 2.0, N=200_000, seed=5)
    # Rays never hit the facet through the origin.
    assert atoms[3].value == 0.0
    assert [a.within(v) for a, v in zip(atoms[:3], [1.0, 1.0, 2.0])] == [True] * 3


def test_scaling_is_exact_for_a_shared_stream():
    small = mc_dual_curvature(square(), Ball(1.0), 3.0, N=20_000, seed=6)
    large = mc_dual_curvature(square(2.0), Ball(1.0), 3.0, N=20_000, seed=6)
    for a, b in zip(small, large):
        assert b.value == pytest.approx(8.0 * a.value, rel=1e-12)
        assert b.stderr == pytest.approx(8.0 * a.stderr, rel=1e-9)


def test_seed_determinism_and_thread_independence(monkeypatch):
    rng = np.random.default_rng(0)
    P = random_polytope(rng, 3)
    Q = random_ellipsoid(rng, 3)
    monkeypatch.setenv("DMK_THREADS", "1")
    one = mc_dual_curvature(P, Q, 1.3, N=300_000, seed=9)
    again = mc_dual_curvature(P, Q, 1.3, N=300_000, seed=9)
    monkeypatch.setenv("DMK_THREADS", "3")
    many = mc_dual_curvature(P, Q, 1.3, N=300_000, seed=9)
    assert one == again == many
    other = mc_dual_curvature(P, Q, 1.3, N=300_000, seed=10)
    assert other != one


def test_stderr_is_sample_deviation_over_root_n():
    P, Q, q, N, seed = square(), Ball(1.0), 3.0, 5_000, 12
    est = mc_dual_intrinsic_volume(P, Q, q, N=N, seed=seed)
    u = sphere_block(seed, 0, N, 2)
    rho = np.min(np.where(u @ P.normals.T > 0, P.offsets / np.maximum(u @ P.normals.T, 1e-300), np.inf),
                 axis=1)
    vals = math.pi * rho**q
    assert est.value == pytest.approx(vals.mean(), rel=1e-12)
    assert est.stderr == pytest.approx(vals.std(ddof=1) / math.sqrt(N), rel=1e-9)
    assert est.samples == N and est.seed == seed


def test_too_few_samples():
    with pytest.raises(ValueError):
        mc_dual_intrinsic_volume(square(), Ball(1.0), 2.0, N=10)


def test_within():
    est = McEstimate(1.0, 0.1, 100, 0)
    assert est.within(1.29) and not est.within(1.31)


def test_unbiased_across_seeds():
    rng = np.random.default_rng(21)
    P = random_polytope(rng, 3)
    Q = random_ellipsoid(rng, 3)
    exact = dual_curvature_measure(P, Q, 2.4).Vq
    inside = sum(mc_dual_intrinsic_volume(P, Q, 2.4, N=20_000, seed=s).within(exact) for s in range(30))
    assert inside >= 28


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_sampler_is_uniform(n):
    u = np.concatenate([sphere_block(77, j, 1 << 16, n) for j in range(4)])
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-14)
    orthant = ((u > 0).astype(int) * (1 << np.arange(n))).sum(axis=1)
    counts = np.bincount(orthant, minlength=2**n)
    assert stats.chisquare(counts).pvalue > 0.001
    assert np.allclose(u.mean(axis=0), 0.0, atol=5.0 / math.sqrt(len(u)))
