import warnings

import numpy as np
import pytest

from pypctta.augmentation.surface import sample_mesh_vertices, vertex_normals
from pypctta.common.cloud import TriangleMesh
from pypctta.exceptions import EmptyMesh, MissingNormalsWarning
from pypctta.io.mesh import read_mesh


@pytest.fixture
def cube_mesh(data_dir) -> TriangleMesh:
    return read_mesh(data_dir / "cube.off")


def test_vertex_normals_point_outward(cube_mesh) -> None:
    normals = vertex_normals(cube_mesh)
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)
    outward = np.sum(normals * (cube_mesh.vertices - 0.5), axis=1)
    assert np.all(outward > 0)


def test_sample_mesh_vertices_without_replacement(cube_mesh) -> None:
    cloud = sample_mesh_vertices(cube_mesh, 8, rng_seed=4)
    assert cloud.n_points == 8
    assert cloud.has_normals
    rows = {tuple(p) for p in cloud.points}
    assert rows == {tuple(v) for v in cube_mesh.vertices}


def test_sample_mesh_vertices_with_replacement_is_seeded(cube_mesh) -> None:
    first = sample_mesh_vertices(cube_mesh, 20, rng_seed=4)
    assert first.n_points == 20
    assert first == sample_mesh_vertices(cube_mesh, 20, rng_seed=4)
    assert first != sample_mesh_vertices(cube_mesh, 20, rng_seed=5)


def test_sample_mesh_vertices_isolated_vertex_warns() -> None:
    mesh = TriangleMesh(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]], [[0, 1, 2]]
    )
    with pytest.warns(MissingNormalsWarning):
        cloud = sample_mesh_vertices(mesh, 4, rng_seed=0)
    assert not cloud.has_normals


def test_sample_mesh_vertices_point_set_has_no_normals() -> None:
    mesh = TriangleMesh([[0, 0, 0], [1, 0, 0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cloud = sample_mesh_vertices(mesh, 3, rng_seed=0)
    assert cloud.n_points == 3
    assert not cloud.has_normals


def test_sample_mesh_vertices_errors() -> None:
    with pytest.raises(EmptyMesh):
        sample_mesh_vertices(TriangleMesh(np.empty((0, 3))), 1, rng_seed=0)
    with pytest.raises(ValueError):
        sample_mesh_vertices(TriangleMesh([[0, 0, 0]]), 0, rng_seed=0)
