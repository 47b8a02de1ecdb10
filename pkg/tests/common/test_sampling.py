from __future__ import annotations

from typing import List

import numpy as np
import pytest
from numpy.typing import NDArray

from pypctta.common.cloud import PointCloud
from pypctta.common.sampling import farthest_point_sample, voxel_grid_centers
from pypctta.exceptions import InvalidEdge, TooFewPoints


def brute_force_fps(points: NDArray[np.float64], m: int, start: int) -> List[int]:
    selected = [start]
    while len(selected) < m:
        best, best_dist = -1, -1.0
        for i in range(points.shape[0]):
            if i in selected:
                continue
            nearest = min(float(np.sum((points[i] - points[j]) ** 2)) for j in selected)
            if nearest > best_dist:
                best, best_dist = i, nearest
        selected.append(best)
    return selected


def full_scan_fps(points: NDArray[np.float64], m: int, start: int) -> List[int]:
    selected = [start]
    min_dist = np.full(points.shape[0], np.inf)
    taken = np.zeros(points.shape[0], dtype=bool)
    taken[start] = True
    while len(selected) < m:
        diff = points - points[selected[-1]]
        min_dist = np.minimum(min_dist, np.sum(diff * diff, axis=-1))
        selected.append(int(np.argmax(np.where(taken, -1.0, min_dist))))
        taken[selected[-1]] = True
    return selected


_GRID = np.stack(np.meshgrid(*[np.arange(12.0)] * 3, indexing="ij"), -1)


def test_fps_matches_brute_force() -> None:
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(1, 65))
        m = int(rng.integers(1, min(16, n) + 1))
        points = rng.uniform(-1.0, 1.0, size=(n, 3))
        start = int(rng.integers(n))
        expected = brute_force_fps(points, m, start)
        if farthest_point_sample(points, m, start).tolist() != expected:
            mismatches += 1
    assert mismatches == 0


@pytest.mark.parametrize(
    "points",
    [
        np.random.default_rng(7).normal(size=(3000, 3)),
        _GRID.reshape(-1, 3),
        np.random.default_rng(8).uniform(size=(500, 5)),
    ],
    ids=["gaussian", "integer-grid", "five-dimensional"],
)
def test_fps_matches_full_scan_on_large_clouds(points) -> None:
    expected = full_scan_fps(points, 400, start=17)
    assert farthest_point_sample(points, 400, start=17).tolist() == expected


def test_fps_square_corners() -> None:
    square = np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0.5, 0]], float
    )
    assert farthest_point_sample(PointCloud(square), 2, start=0).tolist() == [0, 2]
    assert farthest_point_sample(square, 5).tolist() == [0, 2, 1, 3, 4]


def test_fps_is_prefix_stable(random_cloud) -> None:
    full = farthest_point_sample(random_cloud, 32, start=5)
    assert np.array_equal(farthest_point_sample(random_cloud, 10, start=5), full[:10])
    assert len(set(full.tolist())) == 32


def test_fps_duplicates_select_distinct_indices() -> None:
    points = np.zeros((4, 3))
    assert farthest_point_sample(points, 4).tolist() == [0, 1, 2, 3]


@pytest.mark.parametrize(
    "m, start, error",
    [(6, 0, TooFewPoints), (0, 0, ValueError), (2, 5, ValueError)],
    ids=["m>n", "m=0", "start-out-of-range"],
)
def test_fps_errors(m, start, error) -> None:
    with pytest.raises(error):
        farthest_point_sample(np.zeros((5, 3)), m, start)


def test_voxel_grid_centers_unit_box() -> None:
    centers = voxel_grid_centers(([0, 0, 0], [1, 1, 1]), 0.5)
    assert centers.shape == (8, 3)
    assert centers[0].tolist() == [0.25, 0.25, 0.25]
    assert centers[1].tolist() == [0.25, 0.25, 0.75]
    assert centers[-1].tolist() == [0.75, 0.75, 0.75]


def test_voxel_grid_partial_cells_and_flat_axis() -> None:
    centers = voxel_grid_centers(([0, 0, 2], [1.2, 0.4, 2]), 0.5)
    assert centers.shape == (3 * 1 * 1, 3)
    assert np.allclose(centers[:, 0], [0.25, 0.75, 1.25])
    assert np.allclose(centers[:, 2], 2.0)


@pytest.mark.parametrize(
    "edge", [0.0, -1.0, float("inf")], ids=["zero", "negative", "inf"]
)
def test_voxel_grid_invalid_edge(edge) -> None:
    with pytest.raises(InvalidEdge):
        voxel_grid_centers(([0, 0, 0], [1, 1, 1]), edge)
