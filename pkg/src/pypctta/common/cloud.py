from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.exceptions import EmptyCloud

NORMAL_TOLERANCE = 1e-5


def _as_frozen_array(values: ArrayLike, dtype: type = np.float64) -> NDArray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class PointCloud:
    """
    An ordered set of 3D points with optional unit normals.

    The point and normal arrays are read-only; operations that modify a cloud return
    a new `PointCloud`.
    """

    def __init__(
        self,
        points: ArrayLike,
        normals: ArrayLike | None = None,
    ):
        """
        Parameters
        ----------
        points:
            Array-like of shape (n, 3) with the point coordinates.
        normals:
            Optional array-like of shape (n, 3) with unit normals.

        Raises
        ------
        ValueError
            If the arrays have the wrong shape, contain non-finite values or the
            normals are not of unit length.
        """
        points_array = np.asarray(points, dtype=np.float64)
        if points_array.size == 0:
            points_array = points_array.reshape(0, 3)
        if points_array.ndim != 2 or points_array.shape[1] != 3:
            raise ValueError(
                f"Expected `points` with shape (n, 3), but got {points_array.shape}."
            )
        if not np.all(np.isfinite(points_array)):
            raise ValueError("All point coordinates must be finite.")
        self._points = _as_frozen_array(points_array)

        self._normals: NDArray[np.float64] | None = None
        if normals is not None:
            normals_array = np.asarray(normals, dtype=np.float64)
            if normals_array.size == 0:
                normals_array = normals_array.reshape(0, 3)
            if normals_array.shape != points_array.shape:
                raise ValueError(
                    f"Expected `normals` with shape {points_array.shape}, but got {normals_array.shape}."
                )
            if not np.all(np.isfinite(normals_array)):
                raise ValueError("All normal components must be finite.")
            lengths = np.linalg.norm(normals_array, axis=1)
            if np.any(np.abs(lengths - 1.0) > NORMAL_TOLERANCE):
                raise ValueError(
                    f"Normals must have unit length (tolerance {NORMAL_TOLERANCE})."
                )
            self._normals = _as_frozen_array(normals_array)

    @property
    def points(self) -> NDArray[np.float64]:
        """The (n, 3) point coordinates."""
        return self._points

    @property
    def normals(self) -> NDArray[np.float64] | None:
        """The (n, 3) unit normals, if present."""
        return self._normals

    @property
    def has_normals(self) -> bool:
        return self._normals is not None

    @property
    def n_points(self) -> int:
        return int(self._points.shape[0])

    def __len__(self) -> int:
        return self.n_points

    def __repr__(self) -> str:
        return f"PointCloud(n_points={self.n_points}, has_normals={self.has_normals})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        if self.has_normals != other.has_normals:
            return False
        if not np.array_equal(self.points, other.points):
            return False
        if self._normals is not None and other._normals is not None:
            return bool(np.array_equal(self._normals, other._normals))
        return True

    def select(self, indices: Sequence[int] | NDArray[np.integer]) -> PointCloud:
        """Returns the sub-cloud with the given point indices, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        normals = None if self._normals is None else self._normals[idx]
        return PointCloud(self._points[idx], normals)

    def bounds(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """
        Returns the axis-aligned bounding box as a (minimum, maximum) tuple.

        Raises
        ------
        EmptyCloud
            If the cloud has no points.
        """
        require_points(self)
        return self._points.min(axis=0), self._points.max(axis=0)


class TriangleMesh:
    """A triangle mesh given by vertices and triangular faces."""

    def __init__(self, vertices: ArrayLike, faces: ArrayLike | None = None):
        """
        Parameters
        ----------
        vertices:
            Array-like of shape (v, 3) with vertex coordinates.
        faces:
            Optional array-like of shape (f, 3) with vertex indices per triangle.

        Raises
        ------
        ValueError
            If the arrays have the wrong shape, or a face references a vertex that
            does not exist.
        """
        vertices_array = np.asarray(vertices, dtype=np.float64)
        if vertices_array.size == 0:
            vertices_array = vertices_array.reshape(0, 3)
        if vertices_array.ndim != 2 or vertices_array.shape[1] != 3:
            raise ValueError(
                f"Expected `vertices` with shape (v, 3), but got {vertices_array.shape}."
            )
        if not np.all(np.isfinite(vertices_array)):
            raise ValueError("All vertex coordinates must be finite.")

        faces_array = np.asarray([] if faces is None else faces, dtype=np.int64)
        if faces_array.size == 0:
            faces_array = faces_array.reshape(0, 3)
        if faces_array.ndim != 2 or faces_array.shape[1] != 3:
            raise ValueError(
                f"Expected `faces` with shape (f, 3), but got {faces_array.shape}."
            )
        if faces_array.size and (
            faces_array.min() < 0 or faces_array.max() >= vertices_array.shape[0]
        ):
            raise ValueError("Face indices must reference existing vertices.")

        self._vertices = _as_frozen_array(vertices_array)
        self._faces = _as_frozen_array(faces_array, dtype=np.int64)

    @property
    def vertices(self) -> NDArray[np.float64]:
        """The (v, 3) vertex coordinates."""
        return self._vertices

    @property
    def faces(self) -> NDArray[np.int64]:
        """The (f, 3) vertex indices per triangle."""
        return self._faces

    @property
    def n_vertices(self) -> int:
        return int(self._vertices.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self._faces.shape[0])

    def __repr__(self) -> str:
        return f"TriangleMesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"


@dataclass(frozen=True)
class NormalizationTransform:
    """
    Maps coordinates into the unit-sphere frame: ``y = (x - center) / scale``.
    """

    center: Tuple[float, float, float]
    """The centroid of the source cloud."""
    scale: float
    """The maximum centered radius of the source cloud (1 for coincident points)."""

    def __post_init__(self) -> None:
        if len(self.center) != 3:
            raise ValueError(
                f"Expected a 3-vector for 'center', but got {len(self.center)} values."
            )
        if not self.scale > 0:
            raise ValueError(f"'scale' must be positive, but got {self.scale}.")

    @classmethod
    def identity(cls) -> NormalizationTransform:
        return cls(center=(0.0, 0.0, 0.0), scale=1.0)

    def apply(self, points: ArrayLike) -> NDArray[np.float64]:
        """Maps points into the normalized frame."""
        return (np.asarray(points, dtype=np.float64) - np.asarray(self.center)) / (
            self.scale
        )

    def invert(self, points: ArrayLike) -> NDArray[np.float64]:
        """Maps normalized points back to the source frame."""
        return np.asarray(points, dtype=np.float64) * self.scale + np.asarray(
            self.center
        )

    def apply_cloud(self, cloud: PointCloud) -> PointCloud:
        # normals are invariant under translation and uniform positive scaling
        return PointCloud(self.apply(cloud.points), cloud.normals)

    def invert_cloud(self, cloud: PointCloud) -> PointCloud:
        return PointCloud(self.invert(cloud.points), cloud.normals)

    def apply_mesh(self, mesh: TriangleMesh) -> TriangleMesh:
        return TriangleMesh(self.apply(mesh.vertices), mesh.faces)


def require_points(cloud: PointCloud, minimum: int = 1) -> None:
    """
    Raises `EmptyCloud` if `cloud` has no points.

    Parameters
    ----------
    cloud:
        The cloud to check.
    minimum:
        Used by callers that need at least one point; larger minima are checked by
        the callers themselves with `TooFewPoints`.
    """
    if cloud.n_points < max(minimum, 1):
        raise EmptyCloud()


def normalize_unit_sphere(
    cloud: PointCloud,
) -> Tuple[PointCloud, NormalizationTransform]:
    """
    Centers a cloud on its centroid and scales it into the unit sphere.

    Parameters
    ----------
    cloud:
        A non-empty point cloud.

    Returns
    -------
    normalized:
        The cloud with centroid at the origin and maximum point norm 1 (all points at
        the origin if they coincide).
    transform:
        The `NormalizationTransform` that maps the input onto `normalized`.

    Raises
    ------
    EmptyCloud
        If the cloud has no points.
    """
    require_points(cloud)
    center = cloud.points.mean(axis=0)
    radius = float(np.max(np.linalg.norm(cloud.points - center, axis=1)))
    scale = radius if radius > 0 else 1.0
    transform = NormalizationTransform(
        center=(float(center[0]), float(center[1]), float(center[2])), scale=scale
    )
    return transform.apply_cloud(cloud), transform
