from __future__ import annotations

from typing import List, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

from pypctta.common.cloud import PointCloud
from pypctta.exceptions import DimensionMismatch, EmptyCloud

# Relative slack on tree distances: candidates closer than this to the k-th distance
# are re-ranked with the exact formula.
_BALL_SLACK = 1e-9


def euclidean_distances(
    data: NDArray[np.float64], query: NDArray[np.float64]
) -> NDArray[np.float64]:
    """
    Returns the Euclidean distances between `data` and `query` along the last axis.

    Every distance returned by this package is computed with this expression, so a
    linear scan using ``np.sqrt(np.sum(diff * diff, axis=-1))`` reproduces it bit for
    bit.
    """
    diff = data - query
    return np.sqrt(np.sum(diff * diff, axis=-1))


class SpatialIndex:
    """
    Exact nearest-neighbour index over an immutable set of points of any dimension.

    Results are ordered by increasing distance, ties broken by the lower point index,
    and are identical to a brute-force linear scan. The index is read-only after
    construction and may be queried from several threads.
    """

    def __init__(self, data: ArrayLike):
        """
        Parameters
        ----------
        data:
            Array-like of shape (n, d) with n >= 1.

        Raises
        ------
        EmptyCloud
            If `data` has no rows.
        ValueError
            If `data` is not two-dimensional or contains non-finite values.
        """
        array = np.array(data, dtype=np.float64, copy=True)
        if array.ndim != 2:
            raise ValueError(
                f"Expected a 2-dimensional array for the index, but got shape {array.shape}."
            )
        if array.shape[0] == 0:
            raise EmptyCloud()
        if not np.all(np.isfinite(array)):
            raise ValueError("All indexed coordinates must be finite.")
        array.setflags(write=False)
        self._data = array
        self._tree = cKDTree(array)

    @property
    def n_points(self) -> int:
        """The number of indexed points."""
        return int(self._data.shape[0])

    @property
    def dimension(self) -> int:
        return int(self._data.shape[1])

    @property
    def data(self) -> NDArray[np.float64]:
        """The indexed (n, d) coordinates."""
        return self._data

    def _check_queries(self, queries: ArrayLike) -> NDArray[np.float64]:
        array = np.asarray(queries, dtype=np.float64)
        if array.ndim == 1:
            array = array.reshape(1, -1)
        if array.ndim != 2 or array.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"Query dimension {array.shape[-1]} does not match index dimension {self.dimension}."
            )
        if not np.all(np.isfinite(array)):
            raise ValueError("All query coordinates must be finite.")
        return array

    def query(
        self, queries: ArrayLike, k: int
    ) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
        """
        Exact k-nearest-neighbour search for a batch of queries.

        Parameters
        ----------
        queries:
            Array-like of shape (q, d), or a single d-vector.
        k:
            The number of neighbours; clamped to the number of indexed points.

        Returns
        -------
        indices:
            (q, min(k, n)) point indices per query.
        distances:
            (q, min(k, n)) Euclidean distances, non-decreasing per row.

        Raises
        ------
        ValueError
            If k < 1.
        DimensionMismatch
            If the query dimension differs from the index dimension.
        """
        if k < 1:
            raise ValueError(f"k must be a positive integer, but got {k}.")
        q = self._check_queries(queries)
        n_queries = q.shape[0]
        k_eff = min(int(k), self.n_points)

        if n_queries == 0:
            return (
                np.empty((0, k_eff), dtype=np.int64),
                np.empty((0, k_eff), dtype=np.float64),
            )

        if k_eff == self.n_points:
            candidates = np.broadcast_to(
                np.arange(self.n_points, dtype=np.int64), (n_queries, self.n_points)
            )
            return self._rank_rows(np.ascontiguousarray(candidates), q, k_eff)

        # One extra neighbour tells whether the k-th place is contested.
        tree_dist, tree_idx = self._tree.query(q, k=k_eff + 1)
        tree_dist = np.asarray(tree_dist).reshape(n_queries, k_eff + 1)
        tree_idx = np.asarray(tree_idx, dtype=np.int64).reshape(n_queries, k_eff + 1)

        indices, distances = self._rank_rows(
            np.ascontiguousarray(tree_idx[:, :k_eff]), q, k_eff
        )

        kth = tree_dist[:, k_eff - 1]
        contested = tree_dist[:, k_eff] <= kth * (1.0 + _BALL_SLACK) + _BALL_SLACK
        rows = np.flatnonzero(contested)
        if rows.size:
            radii = tree_dist[rows, k_eff] * (1.0 + _BALL_SLACK) + _BALL_SLACK
            balls = self._tree.query_ball_point(q[rows], r=radii)
            for row, ball in zip(rows, balls):
                candidates = np.asarray(ball, dtype=np.int64)
                dist = euclidean_distances(self._data[candidates], q[row])
                order = np.lexsort((candidates, dist))[:k_eff]
                indices[row] = candidates[order]
                distances[row] = dist[order]

        return indices, distances

    def within(self, query: ArrayLike, radius: float) -> NDArray[np.int64]:
        """
        Indices of the indexed points within `radius` of a single query.

        The radius is widened by a relative 1e-9, so the result may hold a few points
        just outside it but never misses one inside. Indices are in no particular
        order.
        """
        point = np.asarray(query, dtype=np.float64).reshape(-1)
        reach = radius * (1.0 + _BALL_SLACK) + _BALL_SLACK
        ball = self._tree.query_ball_point(point, r=reach)
        return np.asarray(ball, dtype=np.int64)

    def _rank_rows(
        self, candidates: NDArray[np.int64], q: NDArray[np.float64], k: int
    ) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
        dist = euclidean_distances(self._data[candidates], q[:, None, :])
        order = np.lexsort((candidates, dist), axis=-1)[:, :k]
        return (
            np.take_along_axis(candidates, order, axis=1),
            np.take_along_axis(dist, order, axis=1),
        )


def build_spatial_index(cloud: PointCloud) -> SpatialIndex:
    """
    Builds an exact nearest-neighbour index over the points of a cloud.

    Raises
    ------
    EmptyCloud
        If the cloud has no points.
    """
    if cloud.n_points == 0:
        raise EmptyCloud()
    return SpatialIndex(cloud.points)


def knn(index: SpatialIndex, query: ArrayLike, k: int) -> List[Tuple[int, float]]:
    """
    Returns the k nearest indexed points of a single query.

    Parameters
    ----------
    index:
        The spatial index.
    query:
        A 3-vector (or a feature vector matching the index dimension).
    k:
        Number of neighbours, clamped to the number of indexed points.

    Returns
    -------
    list
        ``min(k, n)`` tuples of (point index, distance) with non-decreasing distance;
        ties are broken by the lower point index.
    """
    indices, distances = index.query(np.asarray(query, dtype=np.float64), k)
    return [(int(i), float(d)) for i, d in zip(indices[0], distances[0])]


def knn_batch(
    index: SpatialIndex, queries: ArrayLike, k: int
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Batched form of `knn`, returning (indices, distances) arrays."""
    return index.query(queries, k)
