"""Pareto primitives shared by the optimizer, the benchmarks and the simulator.

All functions treat objectives in the minimization sense and operate on
objective arrays of shape ``(n, n_obj)``. They are pure: no function mutates
its inputs.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class Solution:
    """A decision vector with its objective vector and sorting metadata.

    ``rank`` and ``crowding`` are only meaningful after :func:`sort_solutions`.
    """

    position: np.ndarray
    objectives: np.ndarray
    rank: int = 0
    crowding: float = 0.0
    meta: dict = field(default_factory=dict)


def _as_matrix(objectives) -> np.ndarray:
    F = np.asarray(objectives, dtype=float)
    if F.size == 0:
        return F.reshape(0, F.shape[-1] if F.ndim == 2 else 0)
    if F.ndim == 1:
        F = F.reshape(1, -1)
    if F.ndim != 2:
        raise ValueError(f"objectives must be a 2-D array, got shape {F.shape}")
    return F


def dominates(a, b) -> bool:
    """Return True if ``a`` Pareto-dominates ``b`` (minimization).

    Examples:
        >>> dominates([1.0, 1.0], [2.0, 2.0])
        True
        >>> dominates([1.0, 2.0], [2.0, 1.0])
        False
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(objectives) -> np.ndarray:
    """Boolean matrix ``D`` with ``D[i, j]`` True iff row i dominates row j."""
    F = _as_matrix(objectives)
    a = F[:, None, :]
    b = F[None, :, :]
    return np.all(a <= b, axis=2) & np.any(a < b, axis=2)


def non_dominated_mask(objectives) -> np.ndarray:
    """Mask of rows not dominated by any other row."""
    F = _as_matrix(objectives)
    if len(F) == 0:
        return np.zeros(0, dtype=bool)
    return ~dominance_matrix(F).any(axis=0)


def non_dominated_sort(objectives) -> list[np.ndarray]:
    """Partition rows into Pareto fronts (Deb's fast non-dominated sort).

    Args:
        objectives: Array of shape ``(n, n_obj)``, n >= 1.

    Returns:
        List of index arrays; element k holds the members of front k in
        ascending index order. Front 0 is the non-dominated set.
    """
    F = _as_matrix(objectives)
    n = len(F)
    if n == 0:
        raise ValueError("cannot sort an empty population")
    if F.shape[1] == 2:
        ranks = _ranks_2d(F)
        return [np.flatnonzero(ranks == k) for k in range(ranks.max() + 1)]
    dom = dominance_matrix(F)
    count = dom.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (count == 0))
        fronts.append(front)
        remaining[front] = False
        count = count - dom[front].sum(axis=0)
    return fronts


def _ranks_2d(F: np.ndarray) -> np.ndarray:
    # Sweep in lexicographic order keeping the smallest f2 seen on every
    # front; those minima increase with the front index, so the front of a
    # point is found by bisection. Duplicates share the rank of one copy.
    U, inverse = np.unique(F, axis=0, return_inverse=True)
    tails: list[float] = []
    urank = np.empty(len(U), dtype=int)
    for i, f2 in enumerate(U[:, 1].tolist()):  # np.unique sorts rows lexicographically
        k = bisect_right(tails, f2)
        if k == len(tails):
            tails.append(f2)
        else:
            tails[k] = f2
        urank[i] = k
    return urank[inverse.reshape(-1)]


def ranks_from_fronts(fronts: Sequence[np.ndarray], n: int) -> np.ndarray:
    ranks = np.empty(n, dtype=int)
    for k, front in enumerate(fronts):
        ranks[front] = k
    return ranks


def crowding_distance(front_objectives) -> np.ndarray:
    """NSGA-II crowding distance of the members of a single front.

    Boundary members of every objective get ``inf``. An objective whose range
    is zero contributes nothing to interior members.
    """
    F = _as_matrix(front_objectives)
    n, m = F.shape
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
    return dist


def truncate_by_crowding(front_objectives, k: int) -> np.ndarray:
    """Indices of the ``k`` members with the largest crowding distance.

    Ties keep the earlier member. The returned indices are in input order.
    When ``k >= len(front)`` every index is returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    F = _as_matrix(front_objectives)
    n = len(F)
    if k >= n:
        return np.arange(n)
    dist = crowding_distance(F)
    keep = np.argsort(-dist, kind="stable")[:k]
    return np.sort(keep)


def select_best(objectives, k: int) -> np.ndarray:
    """Pick ``k`` rows by front order, breaking the last front by crowding."""
    F = _as_matrix(objectives)
    chosen: list[np.ndarray] = []
    taken = 0
    for front in non_dominated_sort(F):
        if taken + len(front) <= k:
            chosen.append(front)
            taken += len(front)
        else:
            keep = truncate_by_crowding(F[front], k - taken)
            chosen.append(front[keep])
            taken = k
        if taken == k:
            break
    return np.concatenate(chosen)


def unique_rows(objectives) -> np.ndarray:
    """Indices of the first occurrence of every distinct row, in input order."""
    F = _as_matrix(objectives)
    if len(F) == 0:
        return np.zeros(0, dtype=int)
    _, first = np.unique(F, axis=0, return_index=True)
    return np.sort(first)


def hypervolume_2d(front, ref) -> float:
    """Exact hypervolume of a two-objective point set.

    Points that do not strictly dominate ``ref`` contribute nothing and are
    dropped before the sweep.

    Examples:
        >>> hypervolume_2d([[0.0, 0.0]], [11.0, 11.0])
        121.0
        >>> hypervolume_2d([], [11.0, 11.0])
        0.0
    """
    ref = np.asarray(ref, dtype=float)
    if ref.shape != (2,):
        raise ValueError("hypervolume_2d needs a 2-objective reference point")
    P = np.asarray(front, dtype=float).reshape(-1, 2)
    P = P[np.all(P < ref, axis=1)]
    if len(P) == 0:
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    # running minimum of f2 along increasing f1 keeps only the staircase
    best = np.minimum.accumulate(np.concatenate(([ref[1]], P[:, 1])))
    heights = best[:-1] - best[1:]
    return float(np.sum((ref[0] - P[:, 0]) * heights))


def sort_solutions(solutions: Sequence[Solution]) -> list[np.ndarray]:
    """Non-dominated sort of Solution objects, filling ``rank`` and ``crowding``."""
    F = np.array([s.objectives for s in solutions], dtype=float)
    fronts = non_dominated_sort(F)
    for k, front in enumerate(fronts):
        cd = crowding_distance(F[front])
        for idx, d in zip(front, cd):
            solutions[idx].rank = k
            solutions[idx].crowding = float(d)
    return fronts
