"""Monte-Carlo estimators of dual intrinsic volumes and dual curvature atoms.

Directions are normalized standard Gaussians.  Samples are drawn in fixed
blocks, block ``j`` from a Philox stream keyed by ``(seed, j)``, so results
do not depend on how blocks are spread over worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .polytope import HPolytope, radial_function
from .sphere import sphere_area
from .star import Ball, StarBody

BLOCK = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int
    seed: int

    def within(self, target: float, nsigma: float = 3.0) -> bool:
        return abs(self.value - target) <= nsigma * self.stderr


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("DMK_THREADS", "1")))
    except ValueError:
        return 1


def sphere_block(seed: int, block: int, size: int, n: int) -> np.ndarray:
    """Uniform directions on S^{n-1} for one block of the stream."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))
    g = rng.standard_normal((size, n))
    return g / np.sqrt(np.einsum("ij,ij->i", g, g))[:, None]


def _block_sums(P, Q: StarBody, q: float, seed: int, block: int, size: int):
    n = P.dim
    u = sphere_block(seed, block, size, n)
    if isinstance(P, Ball):
        rho, idx, k = np.full(size, P.radius), np.zeros(size, dtype=int), 1
    else:
        rho, idx = radial_function(P, u)
        k = len(P.offsets)
    vals = sphere_area(n) / n * rho**q * Q.radial(u) ** (n - q)
    s1 = np.bincount(idx, weights=vals, minlength=k)
    s2 = np.bincount(idx, weights=vals * vals, minlength=k)
    return s1, s2


def _accumulate(P, Q, q, N, seed):
    if N < 1000:
        raise ValueError("need at least 1000 samples")
    nblocks = -(-N // BLOCK)
    sizes = [min(BLOCK, N - j * BLOCK) for j in range(nblocks)]
    workers = min(worker_count(), nblocks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _block_sums(P, Q, q, seed, j, sizes[j]),
                                  range(nblocks)))
    else:
        parts = [_block_sums(P, Q, q, seed, j, sizes[j]) for j in range(nblocks)]
    s1 = np.sum(np.stack([a for a, _ in parts]), axis=0)
    s2 = np.sum(np.stack([b for _, b in parts]), axis=0)
    return s1, s2


def _estimate(s1: float, s2: float, N: int, seed: int) -> McEstimate:
    mean = s1 / N
    var = max(s2 - N * mean * mean, 0.0) / (N - 1)
    return McEstimate(float(mean), float(np.sqrt(var / N)), int(N), int(seed))


def mc_dual_intrinsic_volume(P: HPolytope | Ball, Q: StarBody, q: float, N: int = 100_000,
                             seed: int = 0) -> McEstimate:
    """Estimate of ``V_q(P, Q)``; ``P`` may also be a :class:`Ball`."""
    s1, s2 = _accumulate(P, Q, q, N, seed)
    return _estimate(float(np.sum(s1)), float(np.sum(s2)), N, seed)


def mc_dual_curvature(P: HPolytope, Q: StarBody, q: float, N: int = 100_000,
                      seed: int = 0) -> list[McEstimate]:
    """One estimate per normal of ``P``; each sample feeds the facet its ray hits."""
    s1, s2 = _accumulate(P, Q, q, N, seed)
    return [_estimate(a, b, N, seed) for a, b in zip(s1, s2)]
