"""Sphere constants, direction grids and cell partitions of S^{n-1}."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def ball_volume(n: int) -> float:
    """kappa_n, the volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """omega_n = n kappa_n, the surface area of S^{n-1}."""
    return n * ball_volume(n)


def circle_directions(m: int, phase: float = 0.0) -> np.ndarray:
    angles = phase + 2.0 * np.pi * np.arange(m) / m
    return np.column_stack([np.cos(angles), np.sin(angles)])


def fibonacci_sphere(m: int) -> np.ndarray:
    """Near-uniform deterministic points on S^2."""
    i = np.arange(m) + 0.5
    z = 1.0 - 2.0 * i / m
    r = np.sqrt(1.0 - z * z)
    theta = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def grid_directions(n: int, m: int = 10_000) -> np.ndarray:
    """Fixed direction grid used for support-function sup-norms."""
    if n == 2:
        return circle_directions(m)
    if n == 3:
        return fibonacci_sphere(m)
    rng = np.random.Generator(np.random.Philox(key=[n, m]))
    g = rng.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v, f


@lru_cache(maxsize=16)
def icosphere_cells(frequency: int) -> tuple[np.ndarray, np.ndarray]:
    """Planar triangles (20 nu^2, 3, 3) subdividing the icosahedron's faces.

    Radially projected, the triangles tile S^2 exactly; outward orientation.
    """
    if frequency < 1:
        raise ValueError("frequency must be >= 1")
    v, faces = _icosahedron()
    nu = frequency
    tris = []
    for a, b, c in faces:
        pa, pb, pc = v[a], v[b], v[c]

        def lattice(i, j):
            return pa + (pb - pa) * (i / nu) + (pc - pa) * (j / nu)

        for i in range(nu):
            for j in range(nu - i):
                tris.append([lattice(i, j), lattice(i + 1, j), lattice(i, j + 1)])
                if i + j < nu - 1:
                    tris.append([lattice(i + 1, j), lattice(i + 1, j + 1), lattice(i, j + 1)])
    tris = np.array(tris)
    normals = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    flip = np.einsum("ij,ij->i", normals, tris.mean(axis=1)) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris, _cell_planes(tris)


def _cell_planes(tris: np.ndarray) -> np.ndarray:
    normals = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


@lru_cache(maxsize=16)
def icosphere(frequency: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit vertices and triangle index triples of the subdivided icosahedron."""
    tris, _ = icosphere_cells(frequency)
    pts = tris.reshape(-1, 3)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    key = np.round(pts, 9)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    verts = np.zeros_like(uniq)
    np.add.at(verts, inverse.reshape(-1), pts)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    return verts, inverse.reshape(-1, 3)
