"""Adaptive cubature over batches of simplices embedded in R^n.

Each simplex is integrated with the symmetric Grundmann-Moeller rule of
degree 7; the degree-5 rule of the same family supplies the error estimate.
Simplices whose estimate is too large, or across which the integrand varies
by more than ``variation``, are bisected along their longest edge.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import QuadratureNotConverged


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for i in range(total, -1, -1):
        for rest in _compositions(total - i, parts - 1):
            yield (i,) + rest


@lru_cache(maxsize=None)
def grundmann_moeller(d: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points (m, d+1) and weights summing to 1 for a d-simplex.

    The rule integrates polynomials of total degree ``degree`` (odd) exactly
    when the weights are multiplied by the simplex volume.
    """
    if degree % 2 == 0 or degree < 1:
        raise ValueError("Grundmann-Moeller rules have odd degree")
    s = (degree - 1) // 2
    points, weights = [], []
    for i in range(s + 1):
        denom = d + 2 * s + 1 - 2 * i
        w = ((-1) ** i * 2.0 ** (-2 * s) * denom ** (2 * s + 1)
             / (math.factorial(i) * math.factorial(d + 2 * s + 1 - i)))
        for beta in _compositions(s - i, d + 1):
            points.append([(2 * b + 1) / denom for b in beta])
            weights.append(w * math.factorial(d))
    return np.array(points), np.array(weights)


def simplex_volumes(simplices: np.ndarray) -> np.ndarray:
    edges = simplices[:, 1:, :] - simplices[:, :1, :]
    d = edges.shape[1]
    gram = edges @ np.swapaxes(edges, 1, 2)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / math.factorial(d)


def _bisect(simplices: np.ndarray) -> np.ndarray:
    d1 = simplices.shape[1]
    pairs = list(combinations(range(d1), 2))
    lengths = np.stack([np.linalg.norm(simplices[:, a] - simplices[:, b], axis=1)
                        for a, b in pairs], axis=1)
    best = np.argmax(lengths, axis=1)
    a = np.array([pairs[j][0] for j in best])
    b = np.array([pairs[j][1] for j in best])
    rows = np.arange(len(simplices))
    mid = 0.5 * (simplices[rows, a] + simplices[rows, b])
    left = simplices.copy()
    right = simplices.copy()
    left[rows, b] = mid
    right[rows, a] = mid
    return np.concatenate([left, right])


def integrate_simplices(
    func,
    simplices: np.ndarray,
    groups: np.ndarray,
    ngroups: int,
    rtol: float = 1e-9,
    variation: float = 0.1,
    max_simplices: int = 200_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``func`` over unions of simplices, one total per group.

    ``simplices`` has shape (s, d+1, n); ``groups[j]`` names the group that
    simplex ``j`` belongs to.  ``func`` maps (N, n) points to (N,) values.
    Returns ``(totals, error_estimates)`` of length ``ngroups``.
    """
    simplices = np.asarray(simplices, dtype=float)
    groups = np.asarray(groups, dtype=int)
    totals = np.zeros(ngroups)
    errors = np.zeros(ngroups)
    if len(simplices) == 0:
        return totals, errors
    d = simplices.shape[1] - 1
    b7, w7 = grundmann_moeller(d, 7)
    b5, w5 = grundmann_moeller(d, 5)
    m7 = len(w7)
    bary = np.vstack([b7, b5])

    vol = simplex_volumes(simplices)
    group_vol = np.bincount(groups, weights=vol, minlength=ngroups)
    done_val = np.zeros(ngroups)
    done_err = np.zeros(ngroups)
    active, act_groups, act_vol = simplices, groups, vol
    count = len(simplices)

    while len(active):
        pts = np.matmul(bary, active)
        vals = func(pts.reshape(-1, pts.shape[-1])).reshape(len(active), -1)
        i7 = act_vol * (vals[:, :m7] @ w7)
        i5 = act_vol * (vals[:, m7:] @ w5)
        err = np.abs(i7 - i5)
        spread = np.ptp(vals, axis=1) / np.maximum(np.max(np.abs(vals), axis=1), 1e-300)

        group_est = done_val + np.bincount(act_groups, weights=i7, minlength=ngroups)
        share = np.zeros(len(active))
        ok_vol = group_vol[act_groups] > 0
        share[ok_vol] = act_vol[ok_vol] / group_vol[act_groups][ok_vol]
        allowed = rtol * np.abs(group_est[act_groups]) * share
        accept = (err <= allowed) & (spread <= variation)

        done_val += np.bincount(act_groups[accept], weights=i7[accept], minlength=ngroups)
        done_err += np.bincount(act_groups[accept], weights=err[accept], minlength=ngroups)
        rej = ~accept
        if not np.any(rej):
            break
        if count + int(np.sum(rej)) > max_simplices:
            # Budget exhausted: accept what we have if the estimate is still fine.
            done_val += np.bincount(act_groups[rej], weights=i7[rej], minlength=ngroups)
            done_err += np.bincount(act_groups[rej], weights=err[rej], minlength=ngroups)
            bad = done_err > rtol * np.abs(done_val)
            if np.any(bad):
                raise QuadratureNotConverged(
                    f"subdivision budget exhausted; relative error "
                    f"{float(np.max(done_err[bad] / np.abs(done_val[bad]))):.3e}")
            break
        active = _bisect(active[rej])
        act_groups = np.concatenate([act_groups[rej], act_groups[rej]])
        act_vol = np.concatenate([act_vol[rej], act_vol[rej]]) * 0.5
        count += int(np.sum(rej))

    totals[:] = done_val
    errors[:] = done_err
    return totals, errors
