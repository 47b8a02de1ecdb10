from __future__ import annotations

import math
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.common.cloud import PointCloud
from pypctta.common.index import SpatialIndex
from pypctta.exceptions import InvalidEdge, TooFewPoints

# Points per block of the running maximum in farthest_point_sample.
_FPS_BLOCK = 256


def farthest_point_sample(
    cloud: PointCloud | NDArray[np.float64], m: int, start: int = 0
) -> NDArray[np.int64]:
    """
    Greedy maximin (farthest point) sampling.

    Each selected index maximizes the minimum distance to the indices selected so
    far. The sequence is deterministic given `start`, ties are broken by the lower
    index, and the first m-1 indices equal the result for m-1. After a pick, only
    the points within the picked point's own minimum distance are updated; they are
    found with a `SpatialIndex`, so the result equals a full scan. The running maximum
    is kept per block of 256 points.

    Parameters
    ----------
    cloud:
        A `PointCloud` or an (n, d) array of points.
    m:
        The number of indices to select, 1 <= m <= n.
    start:
        The index of the first selected point.

    Returns
    -------
    np.array
        The m selected point indices in selection order.

    Raises
    ------
    TooFewPoints
        If m exceeds the number of points.
    ValueError
        If m < 1, `start` is not a valid index or a coordinate is not finite.
    """
    points = np.asarray(cloud.points if isinstance(cloud, PointCloud) else cloud)
    points = points.astype(np.float64, copy=False)
    n = int(points.shape[0])
    if m < 1:
        raise ValueError(f"m must be a positive integer, but got {m}.")
    if m > n:
        raise TooFewPoints(f"Cannot select {m} points from a cloud of {n} points.")
    if not 0 <= start < n:
        raise ValueError(f"start index {start} is out of range for {n} points.")

    selected = np.empty(m, dtype=np.int64)
    selected[0] = start
    if m == 1:
        return selected

    index = SpatialIndex(points)
    # squared distances preserve the maximin order; taken points and padding hold -inf
    n_blocks = -(-n // _FPS_BLOCK)
    padded = np.full(n_blocks * _FPS_BLOCK, -np.inf)
    diff = points - points[start]
    padded[:n] = np.sum(diff * diff, axis=-1)
    padded[start] = -np.inf
    min_dist = padded[:n]
    blocks = padded.reshape(n_blocks, _FPS_BLOCK)
    block_max = blocks.max(axis=1)

    for j in range(1, m):
        # first block holding the maximum, then its first maximum: lowest index wins
        block = int(np.argmax(block_max))
        last = block * _FPS_BLOCK + int(np.argmax(blocks[block]))
        selected[j] = last
        reach = float(min_dist[last])
        min_dist[last] = -np.inf
        if j == m - 1:
            break
        # untaken points hold at most `reach`, so farther points keep their distance
        ball = index.within(points[last], math.sqrt(reach))
        diff = points[ball] - points[last]
        min_dist[ball] = np.minimum(min_dist[ball], np.sum(diff * diff, axis=-1))
        touched = np.unique(np.append(ball // _FPS_BLOCK, block))
        block_max[touched] = blocks[touched].max(axis=1)

    return selected


def voxel_grid_centers(
    bounds: Tuple[ArrayLike, ArrayLike], edge: float
) -> NDArray[np.float64]:
    """
    Returns the centers of a regular grid of cubic cells covering a box.

    The grid starts at the box minimum; each axis has ``ceil(extent / edge)`` cells.
    Axes with zero extent are expanded symmetrically to one edge, so their single
    cell is centered on the flat coordinate.

    Parameters
    ----------
    bounds:
        The (minimum, maximum) corners of the axis-aligned box.
    edge:
        The cell edge length.

    Returns
    -------
    np.array
        (cells, 3) array of cell centers, ordered x-major then y then z.

    Raises
    ------
    InvalidEdge
        If `edge` is not strictly positive.
    ValueError
        If the box minimum exceeds its maximum.
    """
    if not (edge > 0 and math.isfinite(edge)):
        raise InvalidEdge(f"Voxel edge must be positive and finite, but got {edge}.")
    lower = np.asarray(bounds[0], dtype=np.float64).copy()
    upper = np.asarray(bounds[1], dtype=np.float64).copy()
    if lower.shape != (3,) or upper.shape != (3,):
        raise ValueError("Bounds must be two 3-vectors.")
    if np.any(upper < lower):
        raise ValueError(f"Invalid bounds: minimum {lower} exceeds maximum {upper}.")

    flat = upper == lower
    lower[flat] -= edge / 2.0
    upper[flat] += edge / 2.0

    counts = [max(1, math.ceil((hi - lo) / edge)) for lo, hi in zip(lower, upper)]
    axes = [lo + (np.arange(c) + 0.5) * edge for lo, c in zip(lower, counts)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)
