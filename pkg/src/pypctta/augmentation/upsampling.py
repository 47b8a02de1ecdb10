from __future__ import annotations

import logging
import warnings
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.augmentation.params import SeedProjection, UpsampleParams
from pypctta.common.cloud import PointCloud, require_points
from pypctta.common.index import SpatialIndex
from pypctta.common.plane import fit_planes, point_triangle_distances
from pypctta.common.sampling import farthest_point_sample, voxel_grid_centers
from pypctta.exceptions import (
    EmptyInput,
    InsufficientDensity,
    OutlierRemovalWarning,
    TooFewPoints,
)

# Number of voxel centers queried at once.
_CHUNK = 1 << 15


def _require(cloud: PointCloud, minimum: int, name: str) -> None:
    require_points(cloud)
    if cloud.n_points < minimum:
        raise TooFewPoints(
            f"{name} needs at least {minimum} points, but the cloud has {cloud.n_points}."
        )


def _estimated_surface_distances(
    points: NDArray[np.float64],
    index: SpatialIndex,
    centers: NDArray[np.float64],
    k_triangle: int,
) -> NDArray[np.float64]:
    neighbors, _ = index.query(centers, k_triangle)
    corners = points[neighbors]
    # triangle fan (p0, p_i, p_i+1) over the nearest points
    distance = np.full(centers.shape[0], np.inf)
    for i in range(1, k_triangle - 1):
        triangles = np.stack(
            [corners[:, 0], corners[:, i], corners[:, i + 1]], axis=1
        )
        np.minimum(distance, point_triangle_distances(centers, triangles), out=distance)
    return distance


def _resolved(cloud: PointCloud, params: UpsampleParams) -> UpsampleParams:
    if params.voxel_edge is None or params.seed_band is None:
        return params.resolve(cloud)
    return params


def sample_seeds(cloud: PointCloud, params: UpsampleParams) -> NDArray[np.float64]:
    """
    Selects the voxel centers close to the surface estimated from the cloud.

    The bounding box of the cloud, padded by one voxel edge on every side, is
    divided into cubic voxels. A center is kept when its distance to the triangle
    spanned by its `k_triangle` nearest cloud points (a triangle fan when
    `k_triangle` > 3) does not exceed `seed_band`.

    Parameters
    ----------
    cloud:
        The input cloud, with at least `k_triangle` points.
    params:
        The upsampling parameters; unset edge and band are resolved for `cloud`.

    Returns
    -------
    np.array
        (s, 3) array of seed points in grid order.

    Raises
    ------
    TooFewPoints
        If the cloud has fewer than `k_triangle` points.
    """
    _require(cloud, params.k_triangle, "Seed sampling")
    params = _resolved(cloud, params)
    edge = float(params.voxel_edge)  # type: ignore[arg-type]
    band = float(params.seed_band)  # type: ignore[arg-type]

    lower, upper = cloud.bounds()
    centers = voxel_grid_centers((lower - edge, upper + edge), edge)

    index = SpatialIndex(cloud.points)
    keep = np.zeros(centers.shape[0], dtype=bool)
    for start in range(0, centers.shape[0], _CHUNK):
        chunk = centers[start : start + _CHUNK]
        distance = _estimated_surface_distances(
            cloud.points, index, chunk, params.k_triangle
        )
        keep[start : start + _CHUNK] = distance <= band
    return centers[keep]


_Projection = Tuple[
    NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]
]


def _project(
    cloud: PointCloud, seeds: NDArray[np.float64], k_plane: int
) -> _Projection:
    """Returns (seeds, projected, directions, distances) of the non-degenerate seeds."""
    if seeds.shape[0] == 0:
        empty = np.empty((0, 3))
        return empty, empty.copy(), empty.copy(), np.empty(0)

    index = SpatialIndex(cloud.points)
    neighbors, _ = index.query(seeds, k_plane)
    centroids, normals, valid = fit_planes(cloud.points[neighbors])

    seeds = seeds[valid]
    centroids = centroids[valid]
    normals = normals[valid]

    offset = np.sum((seeds - centroids) * normals, axis=1)
    # orient the direction toward the seed so that the distance is non-positive
    directions = np.where(offset[:, None] < 0, -normals, normals)
    distances = -np.abs(offset)
    projected = seeds + distances[:, None] * directions
    return seeds, projected, directions, distances


def project_seeds(
    cloud: PointCloud, seeds: ArrayLike, params: UpsampleParams
) -> List[SeedProjection]:
    """
    Projects seeds onto planes fitted to their `k_plane` nearest cloud points.

    For a seed c with local plane (centroid, normal), the direction n is the normal
    oriented toward c, the distance is ``d = -((c - centroid) . n)`` and the
    projected point is ``c_p = c + d * n``. Seeds with a degenerate neighborhood
    are dropped.

    Raises
    ------
    TooFewPoints
        If the cloud has fewer than `k_plane` points.
    """
    _require(cloud, params.k_plane, "Surface projection")
    seed_array = np.asarray(seeds, dtype=np.float64).reshape(-1, 3)
    kept, projected, directions, distances = _project(
        cloud, seed_array, params.k_plane
    )
    return [
        SeedProjection(
            seed=kept[i],
            projected=projected[i],
            direction=directions[i],
            distance=float(distances[i]),
        )
        for i in range(kept.shape[0])
    ]


def projection_biases(projected: ArrayLike, k_bias: int) -> NDArray[np.float64]:
    """
    Mean distance of every projected point to its `k_bias` nearest other projected
    points (all other points when there are fewer). A single point has bias 0.

    Parameters
    ----------
    projected:
        (p, 3) projected points.
    k_bias:
        The number of neighbours.

    Returns
    -------
    np.array
        (p,) non-negative biases.
    """
    points = np.asarray(projected, dtype=np.float64).reshape(-1, 3)
    count = points.shape[0]
    k = min(int(k_bias), count - 1)
    if k < 1:
        return np.zeros(count)

    indices, distances = SpatialIndex(points).query(points, k + 1)
    others = indices != np.arange(count)[:, None]
    # a point hidden behind k+1 lower-index duplicates: drop the last column
    hidden = np.all(others, axis=1)
    others[hidden, -1] = False
    return distances[others].reshape(count, k).mean(axis=1)


def _outlier_mask(
    biases: NDArray[np.float64], outlier_factor: float
) -> NDArray[np.bool_]:
    threshold = outlier_factor * biases.mean()
    keep = biases <= threshold
    if not np.any(keep):
        warnings.warn(
            "Outlier removal would remove every projection; all projections are kept.",
            OutlierRemovalWarning,
        )
        keep[:] = True
    return keep


def remove_outliers(
    projections: Sequence[SeedProjection], params: UpsampleParams
) -> List[SeedProjection]:
    """
    Removes projections whose bias exceeds `outlier_factor` times the mean bias.

    The bias of a projection is the mean distance from its projected point to its
    `k_bias` nearest other projected points. If no projection would remain, all are
    kept and an `OutlierRemovalWarning` is issued.

    Returns
    -------
    list
        The kept projections in input order, with their `bias` filled in.

    Raises
    ------
    EmptyInput
        If `projections` is empty.
    """
    if len(projections) == 0:
        raise EmptyInput("Outlier removal needs at least one projection.")
    projected = np.stack([p.projected for p in projections])
    biases = projection_biases(projected, params.k_bias)
    keep = _outlier_mask(biases, params.outlier_factor)
    return [
        projection.with_bias(bias)
        for projection, bias, kept in zip(projections, biases, keep)
        if kept
    ]


def densify(
    cloud: PointCloud, params: UpsampleParams, verbose: bool = False
) -> PointCloud:
    """
    Builds the dense cloud of the upsampling pipeline.

    Runs seed sampling, surface projection and (optionally) outlier removal and
    returns the original points (if `include_original`) followed by the accepted
    projections. The dense cloud carries no normals.

    Parameters
    ----------
    cloud:
        The input cloud, with at least max(`k_triangle`, `k_plane`) points.
    params:
        The upsampling parameters; unset edge and band are resolved for `cloud`.
    verbose:
        If True, log the size of every stage.

    Raises
    ------
    TooFewPoints
        If the cloud has too few points.
    """
    _require(cloud, params.min_points, "Upsampling")
    params = _resolved(cloud, params)

    seeds = sample_seeds(cloud, params)
    _, projected, _, _ = _project(cloud, seeds, params.k_plane)
    if verbose:
        logging.info(
            f"Upsampling: {seeds.shape[0]} seeds (edge {params.voxel_edge:.4g}), "
            f"{projected.shape[0]} projections."
        )

    if params.remove_outliers and projected.shape[0] > 0:
        keep = _outlier_mask(
            projection_biases(projected, params.k_bias), params.outlier_factor
        )
        projected = projected[keep]
        if verbose:
            logging.info(
                f"Upsampling: {int(np.sum(~keep))} outlier projections removed."
            )

    if params.include_original:
        projected = np.concatenate([cloud.points, projected], axis=0)
    return PointCloud(projected)


def upsample(
    cloud: PointCloud,
    params: UpsampleParams,
    target_count: int | None = None,
    start: int = 0,
    verbose: bool = False,
) -> PointCloud:
    """
    Upsamples a cloud by surface projection followed by farthest point sampling.

    Parameters
    ----------
    cloud:
        The input cloud, with at least max(`k_triangle`, `k_plane`) points.
    params:
        The upsampling parameters.
    target_count:
        The exact output size; defaults to floor(scale_r * n).
    start:
        Index into the dense cloud of the first farthest point sample.
    verbose:
        If True, log the pipeline stages.

    Returns
    -------
    PointCloud
        Exactly `target_count` points, a subset of the dense cloud.

    Raises
    ------
    TooFewPoints
        If the cloud has too few points.
    InsufficientDensity
        If the dense cloud has fewer than `target_count` points.
    """
    dense = densify(cloud, params, verbose=verbose)
    target = target_count
    if target is None:
        target = params.target_count(cloud.n_points)
    if target < 1:
        raise ValueError(f"target_count must be a positive integer, but got {target}.")
    if dense.n_points < target:
        raise InsufficientDensity(
            f"The dense cloud has {dense.n_points} points but {target} are requested; "
            "increase seed_band or decrease voxel_edge."
        )
    return dense.select(farthest_point_sample(dense, target, start=start))
