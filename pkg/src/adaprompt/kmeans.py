"""Small seeded k-means (k-means++ init, Lloyd iterations) over numpy arrays.

Implemented here rather than imported so the exact seeding, tolerance, and
empty-cluster repair semantics are pinned: greedy-free k-means++ from a given
seed, Euclidean distance, at most 100 iterations or relative inertia change
below 1e-4, and empty clusters repaired by stealing the point farthest from
its current centroid.
"""

from __future__ import annotations

import numpy as np

MAX_ITERATIONS = 100
REL_INERTIA_TOL = 1e-4


class DegenerateClustering(ValueError):
    """k-means could not produce k non-empty clusters."""


def l2_normalize(points: np.ndarray) -> np.ndarray:
    """Row-normalize to unit length; zero rows pass through unchanged."""
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    safe = np.where(norms == 0, 1.0, norms)
    return points / safe


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) matrix of squared Euclidean distances."""
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    while len(chosen) < k:
        d2 = _squared_distances(points, points[chosen]).min(axis=1)
        total = float(d2.sum())
        if total == 0.0:
            # All remaining points coincide with a center; take the lowest
            # unchosen index to stay deterministic.
            remaining = [i for i in range(n) if i not in chosen]
            chosen.append(remaining[0])
            continue
        chosen.append(int(rng.choice(n, p=d2 / total)))
    return points[chosen].copy()


def _repair_empty_clusters(
    points: np.ndarray, assignments: np.ndarray, centers: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Give every empty cluster the point currently farthest from its centroid."""
    k = centers.shape[0]
    for cluster in range(k):
        if np.any(assignments == cluster):
            continue
        d2 = _squared_distances(points, centers)
        current = d2[np.arange(points.shape[0]), assignments]
        donors = np.flatnonzero(
            np.bincount(assignments, minlength=k)[assignments] > 1
        )
        if donors.size == 0:
            raise DegenerateClustering(
                f"cannot fill empty cluster {cluster}: no donor cluster has two points"
            )
        farthest = donors[np.argmax(current[donors])]
        assignments[farthest] = cluster
        centers[cluster] = points[farthest]
    return assignments, centers


def kmeans(
    points: np.ndarray, k: int, seed: int
) -> tuple[np.ndarray, np.ndarray, float]:
    """Cluster points into k groups; returns (assignments, centroids, inertia).

    Deterministic for a given (points, k, seed).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise DegenerateClustering(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(points, k, rng)
    previous_inertia = np.inf
    assignments = np.zeros(n, dtype=int)
    for _ in range(MAX_ITERATIONS):
        d2 = _squared_distances(points, centers)
        assignments = np.argmin(d2, axis=1)
        assignments, centers = _repair_empty_clusters(points, assignments, centers)
        for cluster in range(k):
            members = points[assignments == cluster]
            centers[cluster] = members.mean(axis=0)
        d2 = _squared_distances(points, centers)
        inertia = float(d2[np.arange(n), assignments].sum())
        if previous_inertia != np.inf:
            denom = max(previous_inertia, np.finfo(float).tiny)
            if abs(previous_inertia - inertia) / denom < REL_INERTIA_TOL:
                previous_inertia = inertia
                break
        previous_inertia = inertia
    return assignments, centers, previous_inertia


def nearest_to_centroids(
    points: np.ndarray,
    assignments: np.ndarray,
    centers: np.ndarray,
    tie_order: list[str],
) -> list[int]:
    """Per cluster, the index of the member closest to the centroid.

    Distance ties fall to the smallest tie_order value (e.g. question id).
    Returns one point index per cluster, in cluster order.
    """
    picks = []
    for cluster in range(centers.shape[0]):
        members = np.flatnonzero(assignments == cluster)
        if members.size == 0:
            raise DegenerateClustering(f"cluster {cluster} is empty")
        d2 = _squared_distances(points[members], centers[cluster : cluster + 1])[:, 0]
        best = min(zip(d2, (tie_order[i] for i in members), members))
        picks.append(int(best[2]))
    return picks
