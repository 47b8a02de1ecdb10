from __future__ import annotations

import warnings

import numpy as np
from numpy.typing import NDArray

from pypctta.common.cloud import PointCloud, TriangleMesh
from pypctta.exceptions import EmptyMesh, MissingNormalsWarning
from pypctta.utils import make_rng


def vertex_normals(mesh: TriangleMesh) -> NDArray[np.float64]:
    """
    Area-weighted vertex normals of a triangle mesh.

    Each vertex normal is the normalized sum of the normals of its incident faces,
    weighted by face area. Vertices without incident faces (or whose faces cancel
    out) get a zero vector.

    Parameters
    ----------
    mesh:
        The triangle mesh.

    Returns
    -------
    np.array
        (v, 3) array with unit normals, or zero rows where no normal is defined.
    """
    normals = np.zeros_like(mesh.vertices)
    if mesh.n_faces == 0:
        return normals

    corners = mesh.vertices[mesh.faces]
    # the cross product has length twice the face area
    edge_a = corners[:, 1] - corners[:, 0]
    edge_b = corners[:, 2] - corners[:, 0]
    face_normals = np.cross(edge_a, edge_b)
    for column in range(3):
        np.add.at(normals, mesh.faces[:, column], face_normals)

    lengths = np.linalg.norm(normals, axis=1)
    defined = lengths > 1e-12
    normals[defined] /= lengths[defined, None]
    normals[~defined] = 0.0
    return normals


def sample_mesh_vertices(mesh: TriangleMesh, m: int, rng_seed: int) -> PointCloud:
    """
    Randomly samples a point cloud from the vertices of a mesh.

    Parameters
    ----------
    mesh:
        The mesh to sample; it needs at least one vertex.
    m:
        The number of points. Vertices are drawn uniformly without replacement when
        m does not exceed the vertex count, otherwise with replacement.
    rng_seed:
        Seed of the sampling generator.

    Returns
    -------
    PointCloud
        The sampled vertices. If the mesh has faces, the area-weighted vertex
        normals are attached.

    Raises
    ------
    EmptyMesh
        If the mesh has no vertices.
    ValueError
        If m < 1.
    """
    if mesh.n_vertices == 0:
        raise EmptyMesh()
    if m < 1:
        raise ValueError(f"m must be a positive integer, but got {m}.")

    rng = make_rng(rng_seed)
    if m <= mesh.n_vertices:
        indices = rng.choice(mesh.n_vertices, size=m, replace=False)
    else:
        indices = rng.integers(0, mesh.n_vertices, size=m)

    points = mesh.vertices[indices]
    if mesh.n_faces == 0:
        return PointCloud(points)

    normals = vertex_normals(mesh)[indices]
    if np.any(np.all(normals == 0.0, axis=1)):
        warnings.warn(
            "Some sampled vertices have no incident faces; normals are omitted.",
            MissingNormalsWarning,
        )
        return PointCloud(points)
    return PointCloud(points, normals)
