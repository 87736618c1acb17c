"""Seeded k-means: init, convergence, repair, and centroid-nearest picks."""

from __future__ import annotations

import numpy as np
import pytest

from adaprompt.kmeans import (
    DegenerateClustering,
    kmeans,
    l2_normalize,
    nearest_to_centroids,
)


def blob_points() -> np.ndarray:
    # three tight 2D blobs far apart
    rng = np.random.default_rng(99)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    return np.vstack([c + rng.normal(0, 0.1, size=(6, 2)) for c in centers])


class TestL2Normalize:
    def test_rows_become_unit_length(self):
        points = np.array([[3.0, 4.0], [0.5, 0.0]])
        normalized = l2_normalize(points)
        assert np.allclose(np.linalg.norm(normalized, axis=1), 1.0)

    def test_zero_rows_pass_through(self):
        points = np.array([[0.0, 0.0], [2.0, 0.0]])
        normalized = l2_normalize(points)
        assert np.allclose(normalized[0], [0.0, 0.0])
        assert np.allclose(normalized[1], [1.0, 0.0])


class TestKMeans:
    def test_recovers_separated_blobs(self):
        points = blob_points()
        assignments, centers, inertia = kmeans(points, 3, seed=0)
        groups = [set(np.flatnonzero(assignments == c)) for c in range(3)]
        assert sorted(map(sorted, groups)) == [
            list(range(0, 6)),
            list(range(6, 12)),
            list(range(12, 18)),
        ]
        assert inertia < 1.0
        assert centers.shape == (3, 2)

    def test_same_seed_same_result(self):
        points = blob_points()
        a_assign, a_centers, a_inertia = kmeans(points, 3, seed=5)
        b_assign, b_centers, b_inertia = kmeans(points, 3, seed=5)
        assert np.array_equal(a_assign, b_assign)
        assert np.array_equal(a_centers, b_centers)
        assert a_inertia == b_inertia

    def test_k_equals_n_gives_zero_inertia(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assignments, _, inertia = kmeans(points, 3, seed=0)
        assert sorted(assignments) == [0, 1, 2]
        assert inertia == 0.0

    def test_k_one_center_is_the_mean(self):
        points = blob_points()
        assignments, centers, _ = kmeans(points, 1, seed=0)
        assert set(assignments) == {0}
        assert np.allclose(centers[0], points.mean(axis=0))

    def test_invalid_k_rejected(self):
        points = blob_points()
        with pytest.raises(ValueError):
            kmeans(points, 0, seed=0)
        with pytest.raises(ValueError):
            kmeans(points, len(points) + 1, seed=0)

    def test_duplicate_points_still_fill_every_cluster(self):
        # with only two distinct locations and k=3, empty-cluster repair must
        # still deliver three non-empty clusters (splitting one location)
        points = np.array([[1.0, 1.0]] * 5 + [[2.0, 2.0]] * 5)
        assignments, _, _ = kmeans(points, 3, seed=0)
        assert len(set(assignments)) == 3

    def test_empty_cluster_repair_steals_farthest_point(self):
        # two distinct locations and k=2 must always split them, whichever
        # points the init picks
        points = np.array([[0.0, 0.0]] * 9 + [[5.0, 5.0]])
        for seed in range(10):
            assignments, _, inertia = kmeans(points, 2, seed=seed)
            assert len(set(assignments)) == 2
            assert inertia == 0.0
            lone = assignments[9]
            assert all(a != lone for a in assignments[:9])


class TestNearestToCentroids:
    def test_picks_closest_member_per_cluster(self):
        points = blob_points()
        assignments, centers, _ = kmeans(points, 3, seed=0)
        picks = nearest_to_centroids(points, assignments, centers, [str(i) for i in range(18)])
        assert len(picks) == 3
        for cluster, pick in enumerate(picks):
            members = np.flatnonzero(assignments == cluster)
            assert pick in members
            distances = np.linalg.norm(points[members] - centers[cluster], axis=1)
            best = distances.min()
            assert np.linalg.norm(points[pick] - centers[cluster]) == pytest.approx(best)

    def test_distance_ties_fall_to_smallest_tie_order_value(self):
        points = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        assignments = np.array([0, 0, 0, 0])
        centers = np.array([[0.0, 0.0]])  # all four points equidistant
        picks = nearest_to_centroids(points, assignments, centers, ["d", "b", "a", "c"])
        assert picks == [2]  # index of tie-order minimum "a"

    def test_empty_cluster_rejected(self):
        points = np.array([[0.0, 0.0], [1.0, 1.0]])
        assignments = np.array([0, 0])
        centers = np.array([[0.5, 0.5], [9.0, 9.0]])
        with pytest.raises(DegenerateClustering):
            nearest_to_centroids(points, assignments, centers, ["a", "b"])
