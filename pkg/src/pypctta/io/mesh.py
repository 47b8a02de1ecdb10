from __future__ import annotations

import warnings
from pathlib import Path
from typing import List, Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from pypctta.common.cloud import TriangleMesh
from pypctta.exceptions import (
    IoError,
    MissingFile,
    NonManifoldWarning,
    ParseError,
    UnsupportedFormat,
)
from pypctta.io import _ply

MeshFormat = Literal["off", "ply"]


def mesh_format(path: str | Path) -> MeshFormat:
    """Returns the mesh format of a path from its suffix (``.off`` or ``.ply``)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return "off"
    if suffix == ".ply":
        return "ply"
    raise UnsupportedFormat(f"Unsupported mesh file suffix '{suffix}' of {path}.")


def fan_triangulate(polygon: Sequence[int]) -> List[List[int]]:
    """Splits a polygon (v0, v1, ..., vk) into the triangles (v0, vi, vi+1)."""
    return [
        [polygon[0], polygon[i], polygon[i + 1]] for i in range(1, len(polygon) - 1)
    ]


def _check_manifold(faces: NDArray[np.int64], path: Path) -> None:
    if faces.shape[0] == 0:
        return
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges.sort(axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    shared = int(np.sum(counts > 2))
    if shared:
        warnings.warn(
            f"{path}: {shared} edges are shared by more than two faces.",
            NonManifoldWarning,
        )


def _build(
    vertices: NDArray[np.float64],
    polygons: List[List[int]],
    lines: List[int | None],
    path: Path,
) -> TriangleMesh:
    triangles: List[List[int]] = []
    for polygon, line in zip(polygons, lines):
        if len(polygon) < 3:
            raise ParseError(
                f"A face needs at least 3 vertices, got {len(polygon)}.", path=str(path), line=line
            )
        if min(polygon) < 0 or max(polygon) >= vertices.shape[0]:
            raise ParseError(
                f"Face index out of range for {vertices.shape[0]} vertices.",
                path=str(path),
                line=line,
            )
        triangles.extend(fan_triangulate(polygon))
    faces = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if not np.all(np.isfinite(vertices)):
        raise ParseError("Non-finite vertex coordinate.", path=str(path))
    _check_manifold(faces, path)
    return TriangleMesh(vertices, faces)


def _read_off(path: Path) -> TriangleMesh:
    rows = []
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((number, line.split()))
    if not rows or not rows[0][1][0].endswith("OFF"):
        raise ParseError("OFF header missing.", path=str(path), line=1)

    header = rows[0][1][1:] if len(rows[0][1]) > 1 else None
    position = 1
    if header is None:
        if len(rows) < 2:
            raise ParseError("OFF counts line missing.", path=str(path), line=1)
        line_no, header = rows[1]
        position = 2
    else:
        line_no = rows[0][0]
    try:
        n_vertices, n_faces = int(header[0]), int(header[1])
    except (ValueError, IndexError):
        raise ParseError("Invalid OFF counts line.", path=str(path), line=line_no)

    if len(rows) < position + n_vertices + n_faces:
        raise ParseError(
            f"Expected {n_vertices} vertices and {n_faces} faces, file is too short.",
            path=str(path),
        )
    vertices = np.empty((n_vertices, 3))
    for i in range(n_vertices):
        number, tokens = rows[position + i]
        if len(tokens) < 3:
            raise ParseError(
                "A vertex needs 3 coordinates.", path=str(path), line=number
            )
        try:
            vertices[i] = [float(t) for t in tokens[:3]]
        except ValueError:
            raise ParseError("Invalid vertex coordinates.", path=str(path), line=number)
    position += n_vertices

    polygons: List[List[int]] = []
    lines: List[int | None] = []
    for i in range(n_faces):
        number, tokens = rows[position + i]
        try:
            count = int(tokens[0])
            polygon = [int(t) for t in tokens[1 : 1 + count]]
        except ValueError:
            raise ParseError("Invalid face indices.", path=str(path), line=number)
        if len(polygon) != count:
            raise ParseError(
                f"Face declares {count} vertices but lists {len(polygon)}.",
                path=str(path),
                line=number,
            )
        polygons.append(polygon)
        lines.append(number)
    return _build(vertices, polygons, lines, path)


def _read_ply(path: Path) -> TriangleMesh:
    data = _ply.read_ply(path)
    vertex = data.columns.get("vertex")
    if vertex is None or not all(name in vertex for name in ("x", "y", "z")):
        raise ParseError("PLY vertices need the properties x, y, z.", path=str(path))
    vertices = np.stack([vertex["x"], vertex["y"], vertex["z"]], axis=1)

    face_lists = data.lists.get("face", {})
    indices = face_lists.get("vertex_indices", face_lists.get("vertex_index", []))
    polygons = [[int(i) for i in polygon] for polygon in indices]
    return _build(vertices, polygons, [None] * len(polygons), path)


def read_mesh(path: str | Path) -> TriangleMesh:
    """
    Reads a triangle mesh from an OFF or PLY file.

    Polygons with more than three vertices are fan-triangulated. Edges shared by
    more than two faces raise a `NonManifoldWarning`, not an error.

    Raises
    ------
    MissingFile
        If the file does not exist.
    ParseError
        If the content is malformed or a face index is out of range.
    UnsupportedFormat
        For unknown suffixes and big-endian PLY.
    """
    path = Path(path)
    fmt = mesh_format(path)
    if not path.is_file():
        raise MissingFile([str(path)])
    if fmt == "off":
        return _read_off(path)
    return _read_ply(path)


def write_mesh(
    mesh: TriangleMesh,
    path: str | Path,
    format: MeshFormat | None = None,
    precision: int = 9,
) -> None:
    """
    Writes a triangle mesh as OFF or ascii PLY.

    Raises
    ------
    IoError
        If the file cannot be written.
    """
    path = Path(path)
    fmt = format if format is not None else mesh_format(path)
    vertex_lines = "".join(
        " ".join(f"{v:.{precision}g}" for v in row) + "\n" for row in mesh.vertices
    )
    face_lines = "".join(
        "3 " + " ".join(str(int(i)) for i in face) + "\n" for face in mesh.faces
    )
    if fmt == "off":
        payload = f"OFF\n{mesh.n_vertices} {mesh.n_faces} 0\n".encode("ascii")
    elif fmt == "ply":
        payload = _ply.header(
            "ascii",
            [
                ("vertex", mesh.n_vertices, ["double x", "double y", "double z"]),
                ("face", mesh.n_faces, ["list uchar int vertex_indices"]),
            ],
        )
    else:
        raise UnsupportedFormat(f"Unknown mesh format '{fmt}'.")
    payload += (vertex_lines + face_lines).encode("ascii")

    try:
        path.write_bytes(payload)
    except OSError as error:
        raise IoError(f"Cannot write mesh to {path}: {error}") from error
