from pypctta.common.cloud import (
    NormalizationTransform,
    PointCloud,
    TriangleMesh,
    normalize_unit_sphere,
)
from pypctta.common.index import SpatialIndex, build_spatial_index, knn, knn_batch
from pypctta.common.plane import (
    Plane,
    fit_plane,
    fit_planes,
    point_triangle_distance,
    point_triangle_distances,
)
from pypctta.common.sampling import farthest_point_sample, voxel_grid_centers

__all__ = [
    "NormalizationTransform",
    "PointCloud",
    "TriangleMesh",
    "normalize_unit_sphere",
    "SpatialIndex",
    "build_spatial_index",
    "knn",
    "knn_batch",
    "Plane",
    "fit_plane",
    "fit_planes",
    "point_triangle_distance",
    "point_triangle_distances",
    "farthest_point_sample",
    "voxel_grid_centers",
]
