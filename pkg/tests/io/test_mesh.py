import numpy as np
import pytest

from pypctta.common.cloud import TriangleMesh
from pypctta.exceptions import (
    MissingFile,
    NonManifoldWarning,
    ParseError,
    UnsupportedFormat,
)
from pypctta.io.mesh import fan_triangulate, mesh_format, read_mesh, write_mesh
from pypctta.synth import shape_mesh


def test_read_off(data_dir) -> None:
    mesh = read_mesh(data_dir / "cube.off")
    assert mesh.n_vertices == 8
    assert mesh.n_faces == 12


@pytest.mark.parametrize("name", ["quad_cube.off", "cube_mesh.ply"])
def test_quads_are_fan_triangulated(data_dir, name) -> None:
    mesh = read_mesh(data_dir / name)
    assert mesh.n_vertices == 8
    assert mesh.n_faces == 12
    assert mesh.faces[0].tolist() == [0, 3, 2]
    assert mesh.faces[1].tolist() == [0, 2, 1]


def test_fan_triangulate() -> None:
    assert fan_triangulate([0, 1, 2]) == [[0, 1, 2]]
    assert fan_triangulate([0, 1, 2, 3, 4]) == [[0, 1, 2], [0, 2, 3], [0, 3, 4]]


def test_face_index_out_of_range(data_dir) -> None:
    with pytest.raises(ParseError, match="out of range") as error:
        read_mesh(data_dir / "bad_index.off")
    assert error.value.line == 6


def test_counts_on_header_line(tmp_path) -> None:
    path = tmp_path / "inline.off"
    path.write_text("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    assert read_mesh(path).n_faces == 1


def test_short_off(tmp_path) -> None:
    path = tmp_path / "short.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    with pytest.raises(ParseError, match="too short"):
        read_mesh(path)


def test_non_manifold_edge_warns(tmp_path) -> None:
    mesh = TriangleMesh(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]],
        [[0, 1, 2], [0, 1, 3], [0, 1, 4]],
    )
    path = tmp_path / "fins.off"
    write_mesh(mesh, path)
    with pytest.warns(NonManifoldWarning):
        assert read_mesh(path).n_faces == 3


@pytest.mark.parametrize("suffix", [".off", ".ply"])
def test_write_read(tmp_path, suffix) -> None:
    mesh = shape_mesh("cylinder")
    path = tmp_path / f"cylinder{suffix}"
    write_mesh(mesh, path, precision=17)
    restored = read_mesh(path)
    assert np.array_equal(restored.faces, mesh.faces)
    assert np.allclose(restored.vertices, mesh.vertices, rtol=0.0, atol=1e-12)


def test_missing_and_unsupported(tmp_path) -> None:
    with pytest.raises(MissingFile):
        read_mesh(tmp_path / "absent.off")
    with pytest.raises(UnsupportedFormat):
        mesh_format("mesh.obj")
