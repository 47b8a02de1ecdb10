from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.exceptions import DegenerateNeighborhood

# Relative eigenvalue threshold below which a neighborhood does not span a plane.
EIGEN_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Plane:
    """
    A plane through `centroid` with unit normal `normal`.
    """

    centroid: NDArray[np.float64]
    normal: NDArray[np.float64]

    def __post_init__(self) -> None:
        centroid = np.asarray(self.centroid, dtype=np.float64)
        normal = np.asarray(self.normal, dtype=np.float64)
        if centroid.shape != (3,) or normal.shape != (3,):
            raise ValueError(
                "Expected 3-vectors for 'centroid' and 'normal', "
                f"but got shapes {centroid.shape} and {normal.shape}."
            )
        length = float(np.linalg.norm(normal))
        if abs(length - 1.0) > 1e-6:
            raise ValueError(
                f"'normal' must have unit length, but has length {length}."
            )
        object.__setattr__(self, "centroid", centroid)
        object.__setattr__(self, "normal", normal)

    def signed_distance(self, points: ArrayLike) -> NDArray[np.float64]:
        """Signed distance of points to the plane, positive on the normal side."""
        return (np.asarray(points, dtype=np.float64) - self.centroid) @ self.normal

    def project(self, points: ArrayLike) -> NDArray[np.float64]:
        """Orthogonal projection of points onto the plane."""
        array = np.asarray(points, dtype=np.float64)
        distance = self.signed_distance(array)
        return array - np.multiply.outer(distance, self.normal)


def fit_planes(
    neighborhoods: ArrayLike,
) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.bool_]]:
    """
    Least-squares planes through a batch of equally sized neighborhoods.

    Parameters
    ----------
    neighborhoods:
        Array-like of shape (s, k, 3), k >= 3.

    Returns
    -------
    centroids:
        (s, 3) neighborhood means.
    normals:
        (s, 3) unit eigenvectors of the smallest covariance eigenvalue, signed so
        that the first component with magnitude above 1e-12 is positive.
    valid:
        (s,) boolean mask; False where the neighborhood is degenerate (coincident
        or collinear points).
    """
    hoods = np.asarray(neighborhoods, dtype=np.float64)
    if hoods.ndim != 3 or hoods.shape[2] != 3:
        raise ValueError(
            f"Expected neighborhoods of shape (s, k, 3), got {hoods.shape}."
        )
    if hoods.shape[1] < 3:
        raise ValueError(
            f"A plane needs at least 3 points, but neighborhoods have {hoods.shape[1]}."
        )

    centroids = hoods.mean(axis=1)
    centered = hoods - centroids[:, None, :]
    covariance = np.einsum("ski,skj->sij", centered, centered) / hoods.shape[1]

    # eigenvalues in ascending order
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    normals = np.ascontiguousarray(eigenvectors[:, :, 0])
    largest = eigenvalues[:, 2]
    valid = (largest > 0) & (eigenvalues[:, 1] > EIGEN_TOLERANCE * largest)

    significant = np.abs(normals) > 1e-12
    first = np.argmax(significant, axis=1)
    leading = normals[np.arange(normals.shape[0]), first]
    normals *= np.where(leading < 0, -1.0, 1.0)[:, None]
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    return centroids, normals, valid


def fit_plane(points: ArrayLike) -> Plane:
    """
    Fits the least-squares plane through at least three points.

    The centroid is the mean of the points and the normal is the eigenvector of the
    smallest eigenvalue of their 3x3 covariance matrix, signed so that its first
    non-zero component is positive.

    Parameters
    ----------
    points:
        Array-like of shape (k, 3), k >= 3.

    Returns
    -------
    Plane

    Raises
    ------
    DegenerateNeighborhood
        If the points coincide or are collinear.
    ValueError
        If fewer than 3 points are given.
    """
    array = np.asarray(points, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != 3:
        raise ValueError(f"Expected points of shape (k, 3), but got {array.shape}.")
    centroids, normals, valid = fit_planes(array[None, :, :])
    if not valid[0]:
        raise DegenerateNeighborhood(
            f"The {array.shape[0]} points are coincident or collinear."
        )
    return Plane(centroid=centroids[0], normal=normals[0])


def _segment_distances(
    points: NDArray[np.float64], start: NDArray[np.float64], end: NDArray[np.float64]
) -> NDArray[np.float64]:
    edge = end - start
    length2 = np.sum(edge * edge, axis=-1)
    along = np.sum((points - start) * edge, axis=-1)
    t = np.divide(along, length2, out=np.zeros_like(along), where=length2 > 0)
    closest = start + np.clip(t, 0.0, 1.0)[..., None] * edge
    diff = points - closest
    return np.sqrt(np.sum(diff * diff, axis=-1))


def point_triangle_distances(
    points: ArrayLike, triangles: ArrayLike
) -> NDArray[np.float64]:
    """
    Exact Euclidean distances from points to closed triangles, pairwise.

    Parameters
    ----------
    points:
        Array-like of shape (s, 3).
    triangles:
        Array-like of shape (s, 3, 3); row i holds the corners of the triangle of
        point i.

    Returns
    -------
    np.array
        (s,) non-negative distances. Degenerate triangles (collinear or coincident
        corners) are measured as segments or points.
    """
    p = np.asarray(points, dtype=np.float64)
    tri = np.asarray(triangles, dtype=np.float64)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    edge_distance = np.minimum(
        np.minimum(_segment_distances(p, a, b), _segment_distances(p, b, c)),
        _segment_distances(p, c, a),
    )

    e0 = b - a
    e1 = c - a
    cross = np.cross(e0, e1)
    area2 = np.sqrt(np.sum(cross * cross, axis=-1))
    scale = np.maximum(np.sum(e0 * e0, axis=-1), np.sum(e1 * e1, axis=-1))
    proper = area2 > EIGEN_TOLERANCE * scale
    if not np.any(proper):
        return edge_distance

    normal = np.zeros_like(cross)
    normal[proper] = cross[proper] / area2[proper, None]
    height = np.sum((p - a) * normal, axis=-1)
    foot = p - height[:, None] * normal

    v2 = foot - a
    d00 = np.sum(e0 * e0, axis=-1)
    d01 = np.sum(e0 * e1, axis=-1)
    d11 = np.sum(e1 * e1, axis=-1)
    d20 = np.sum(v2 * e0, axis=-1)
    d21 = np.sum(v2 * e1, axis=-1)
    denom = d00 * d11 - d01 * d01
    safe = np.where(proper, denom, 1.0)
    v = (d11 * d20 - d01 * d21) / safe
    w = (d00 * d21 - d01 * d20) / safe
    inside = proper & (v >= 0) & (w >= 0) & (v + w <= 1)

    return np.where(inside, np.minimum(np.abs(height), edge_distance), edge_distance)


def point_triangle_distance(p: ArrayLike, tri: ArrayLike) -> float:
    """
    Exact Euclidean distance from a point to a closed triangle.

    Parameters
    ----------
    p:
        A 3-vector.
    tri:
        Array-like of shape (3, 3) with the triangle corners.

    Returns
    -------
    float
        The distance; the perpendicular height when the foot point lies inside the
        triangle, otherwise the distance to the nearest edge or corner.
    """
    point = np.asarray(p, dtype=np.float64).reshape(1, 3)
    corners = np.asarray(tri, dtype=np.float64).reshape(1, 3, 3)
    return float(point_triangle_distances(point, corners)[0])
