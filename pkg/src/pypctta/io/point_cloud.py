from __future__ import annotations

from pathlib import Path
from typing import List, Literal

import numpy as np

from pypctta.common.cloud import PointCloud
from pypctta.exceptions import IoError, MissingFile, ParseError, UnsupportedFormat
from pypctta.io import _ply

CloudFormat = Literal["xyz", "ply", "ply-ascii"]

_NORMAL_NAMES = ("nx", "ny", "nz")


def cloud_format(path: str | Path) -> CloudFormat:
    """
    Returns the point cloud format of a path from its suffix: ``.xyz``/``.txt`` for
    XYZ text, ``.ply`` for binary little-endian PLY.

    Raises
    ------
    UnsupportedFormat
        For any other suffix.
    """
    suffix = Path(path).suffix.lower()
    if suffix in (".xyz", ".txt", ".pts"):
        return "xyz"
    if suffix == ".ply":
        return "ply"
    raise UnsupportedFormat(
        f"Unsupported point cloud file suffix '{suffix}' of {path}."
    )


def _read_xyz(path: Path) -> PointCloud:
    rows: List[List[float]] = []
    width = None
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (3, 6):
            raise ParseError(
                f"Expected 3 or 6 values, but got {len(tokens)}.", path=str(path), line=number
            )
        if width is not None and len(tokens) != width:
            raise ParseError(
                f"Expected {width} values like the preceding lines, got {len(tokens)}.",
                path=str(path),
                line=number,
            )
        width = len(tokens)
        try:
            rows.append([float(token) for token in tokens])
        except ValueError:
            raise ParseError(
                f"Non-numeric value in '{line}'.", path=str(path), line=number
            )

    array = np.asarray(rows, dtype=np.float64).reshape(-1, width or 3)
    if not np.all(np.isfinite(array)):
        raise ParseError("Non-finite coordinate.", path=str(path))
    normals = array[:, 3:6] if width == 6 else None
    return _build(array[:, :3], normals, path)


def _build(points: np.ndarray, normals: np.ndarray | None, path: Path) -> PointCloud:
    try:
        return PointCloud(points, normals)
    except ValueError as error:
        raise ParseError(str(error), path=str(path)) from error


def _read_ply(path: Path) -> PointCloud:
    data = _ply.read_ply(path)
    vertex = data.columns.get("vertex")
    if vertex is None:
        raise ParseError("PLY file has no 'vertex' element.", path=str(path))
    missing = [name for name in ("x", "y", "z") if name not in vertex]
    if missing:
        raise ParseError(f"PLY vertices lack properties {missing}.", path=str(path))
    points = np.stack([vertex["x"], vertex["y"], vertex["z"]], axis=1)

    normals = None
    present = [name in vertex for name in _NORMAL_NAMES]
    if all(present):
        normals = np.stack([vertex[name] for name in _NORMAL_NAMES], axis=1)
    elif any(present):
        raise ParseError(
            "PLY vertices have an incomplete set of normals.", path=str(path)
        )
    return _build(points, normals, path)


def read_point_cloud(path: str | Path) -> PointCloud:
    """
    Reads a point cloud from an XYZ text or PLY file.

    XYZ files hold whitespace-separated ``x y z [nx ny nz]`` per line; text after
    ``#`` is a comment. PLY files may be ascii or binary little-endian and need
    the vertex properties x, y, z and optionally nx, ny, nz.

    Parameters
    ----------
    path:
        The file path; the format follows from the suffix.

    Returns
    -------
    PointCloud

    Raises
    ------
    MissingFile
        If the file does not exist.
    ParseError
        If the content is malformed; the error names the line or byte offset.
    UnsupportedFormat
        For unknown suffixes and big-endian PLY.
    """
    path = Path(path)
    fmt = cloud_format(path)
    if not path.is_file():
        raise MissingFile([str(path)])
    if fmt == "xyz":
        return _read_xyz(path)
    return _read_ply(path)


def write_point_cloud(
    cloud: PointCloud,
    path: str | Path,
    format: CloudFormat | None = None,
    precision: int = 9,
) -> None:
    """
    Writes a point cloud.

    Parameters
    ----------
    cloud:
        The cloud; an empty cloud gives a valid file without points.
    path:
        The output path.
    format:
        "xyz" (text), "ply" (binary little-endian, float64, bit-exact round trip)
        or "ply-ascii"; by default derived from the suffix.
    precision:
        Significant digits of text formats.

    Raises
    ------
    IoError
        If the file cannot be written.
    """
    path = Path(path)
    fmt = format if format is not None else cloud_format(path)
    columns = cloud.points
    names = ["x", "y", "z"]
    if cloud.normals is not None:
        columns = np.concatenate([cloud.points, cloud.normals], axis=1)
        names += list(_NORMAL_NAMES)

    if fmt == "xyz":
        text = "\n".join(" ".join(f"{v:.{precision}g}" for v in row) for row in columns)
        payload = (text + "\n" if text else "").encode("ascii")
    elif fmt == "ply":
        head = _ply.header(
            "binary_little_endian",
            [("vertex", cloud.n_points, [f"double {name}" for name in names])],
        )
        payload = head + np.ascontiguousarray(columns, dtype="<f8").tobytes()
    elif fmt == "ply-ascii":
        head = _ply.header(
            "ascii", [("vertex", cloud.n_points, [f"double {name}" for name in names])]
        )
        body = "".join(
            " ".join(f"{v:.{precision}g}" for v in row) + "\n" for row in columns
        )
        payload = head + body.encode("ascii")
    else:
        raise UnsupportedFormat(f"Unknown point cloud format '{fmt}'.")

    try:
        path.write_bytes(payload)
    except OSError as error:
        raise IoError(f"Cannot write point cloud to {path}: {error}") from error
