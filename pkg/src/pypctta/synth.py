from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from tqdm import tqdm

from pypctta.common.cloud import PointCloud, TriangleMesh
from pypctta.exceptions import UsageError
from pypctta.io.labels import write_labels
from pypctta.io.manifest import DatasetManifest, ManifestEntry, write_manifest
from pypctta.io.mesh import write_mesh
from pypctta.io.point_cloud import write_point_cloud
from pypctta.utils import derive_seed, make_rng

CYLINDER_RADIUS = 1.0
CYLINDER_HEIGHT = 2.0
CYLINDER_SEGMENTS = 32
ICOSPHERE_SUBDIVISIONS = 2


class SyntheticShape(Enum):
    """
    The shapes of the synthetic dataset with their part labels.

    sphere: 0 upper hemisphere (z >= 0), 1 lower hemisphere;
    cube: 2 top and bottom faces, 3 side faces;
    cylinder: 4 side, 5 caps.
    """

    Sphere = "sphere"
    Cube = "cube"
    Cylinder = "cylinder"

    @classmethod
    def get(cls, item: str | SyntheticShape) -> SyntheticShape:
        if isinstance(item, cls):
            return item
        for member in cls:
            if item in (member.name, member.value):
                return member
        raise UsageError(
            f"Unknown shape '{item}'. Select from {[m.value for m in cls]}."
        )

    @property
    def parts(self) -> Tuple[int, int]:
        return _PARTS[self]


_PARTS: Dict[SyntheticShape, Tuple[int, int]] = {
    SyntheticShape.Sphere: (0, 1),
    SyntheticShape.Cube: (2, 3),
    SyntheticShape.Cylinder: (4, 5),
}


def _sample_sphere(n: int, rng: np.random.Generator) -> Tuple[NDArray, NDArray]:
    directions = rng.standard_normal((n, 3))
    lengths = np.linalg.norm(directions, axis=1)
    # a zero draw has probability zero; keep the division finite anyway
    lengths[lengths == 0.0] = 1.0
    points = directions / lengths[:, None]
    labels = np.where(points[:, 2] >= 0.0, 0, 1)
    return points, labels


def _sample_cube(n: int, rng: np.random.Generator) -> Tuple[NDArray, NDArray]:
    faces = rng.integers(6, size=n)
    axis = faces // 2
    sign = np.where(faces % 2 == 0, 1.0, -1.0)
    points = rng.uniform(-1.0, 1.0, size=(n, 3))
    points[np.arange(n), axis] = sign
    labels = np.where(axis == 2, 2, 3)
    return points, labels


def _sample_cylinder(n: int, rng: np.random.Generator) -> Tuple[NDArray, NDArray]:
    half = CYLINDER_HEIGHT / 2.0
    side_area = 2.0 * np.pi * CYLINDER_RADIUS * CYLINDER_HEIGHT
    cap_area = 2.0 * np.pi * CYLINDER_RADIUS**2
    on_side = rng.random(n) < side_area / (side_area + cap_area)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)

    # uniform on a disc: radius proportional to the square root of a uniform draw
    radius = np.where(
        on_side, CYLINDER_RADIUS, CYLINDER_RADIUS * np.sqrt(rng.random(n))
    )
    height = np.where(
        on_side,
        rng.uniform(-half, half, size=n),
        np.where(rng.random(n) < 0.5, half, -half),
    )
    points = np.stack([radius * np.cos(angle), radius * np.sin(angle), height], axis=1)
    labels = np.where(on_side, 4, 5)
    return points, labels


_SAMPLERS = {
    SyntheticShape.Sphere: _sample_sphere,
    SyntheticShape.Cube: _sample_cube,
    SyntheticShape.Cylinder: _sample_cylinder,
}


def sample_shape(
    shape: SyntheticShape | str, n_points: int, seed: int, noise: float = 0.0
) -> Tuple[PointCloud, NDArray[np.int64]]:
    """
    Samples points uniformly on the surface of a synthetic shape.

    The sphere has radius 1, the cube spans [-1, 1] on every axis and the cylinder
    has radius 1, height 2 and its axis along z. Part labels are assigned from the
    noise-free surface point.

    Parameters
    ----------
    shape:
        The shape.
    n_points:
        The number of points, at least 1.
    seed:
        Seed of the sampling and the noise.
    noise:
        Standard deviation of the isotropic Gaussian noise added to every
        coordinate.

    Returns
    -------
    tuple
        The cloud and its per-point part labels.
    """
    shape = SyntheticShape.get(shape)
    if n_points < 1:
        raise ValueError(f"'n_points' must be >= 1, but got {n_points}.")
    if not np.isfinite(noise) or noise < 0:
        raise ValueError(f"'noise' must be a non-negative number, but got {noise}.")
    rng = make_rng(seed)
    points, labels = _SAMPLERS[shape](n_points, rng)
    if noise > 0:
        points = points + noise * rng.standard_normal(points.shape)
    return PointCloud(points), labels.astype(np.int64)


def _icosphere(subdivisions: int) -> TriangleMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    vertices: List[NDArray] = [
        np.array(v, dtype=np.float64)
        for v in (
            (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
            (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
            (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
        )
    ]
    vertices = [v / np.linalg.norm(v) for v in vertices]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        midpoints: Dict[Tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in midpoints:
                middle = vertices[a] + vertices[b]
                vertices.append(middle / np.linalg.norm(middle))
                midpoints[key] = len(vertices) - 1
            return midpoints[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = refined
    return TriangleMesh(np.stack(vertices), np.asarray(faces, dtype=np.int64))


def _cube_mesh() -> TriangleMesh:
    vertices = np.array(
        [[x, y, z] for x in (-1.0, 1.0) for y in (-1.0, 1.0) for z in (-1.0, 1.0)]
    )
    faces = [
        (0, 2, 3), (0, 3, 1),  # x = -1
        (4, 5, 7), (4, 7, 6),  # x = +1
        (0, 1, 5), (0, 5, 4),  # y = -1
        (2, 6, 7), (2, 7, 3),  # y = +1
        (0, 4, 6), (0, 6, 2),  # z = -1
        (1, 3, 7), (1, 7, 5),  # z = +1
    ]
    # listed with inward winding; reversed so the normals point outward
    return TriangleMesh(vertices, np.asarray(faces, dtype=np.int64)[:, ::-1])


def _cylinder_mesh(segments: int = CYLINDER_SEGMENTS) -> TriangleMesh:
    half = CYLINDER_HEIGHT / 2.0
    angles = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack(
        [CYLINDER_RADIUS * np.cos(angles), CYLINDER_RADIUS * np.sin(angles)], axis=1
    )
    bottom = np.column_stack([ring, np.full(segments, -half)])
    top = np.column_stack([ring, np.full(segments, half)])
    vertices = np.concatenate([bottom, top, [[0.0, 0.0, -half], [0.0, 0.0, half]]])
    bottom_center, top_center = 2 * segments, 2 * segments + 1

    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append((i, j, segments + j))
        faces.append((i, segments + j, segments + i))
        faces.append((bottom_center, j, i))
        faces.append((top_center, segments + i, segments + j))
    return TriangleMesh(vertices, np.asarray(faces, dtype=np.int64))


def shape_mesh(shape: SyntheticShape | str) -> TriangleMesh:
    """
    Returns the noise-free mesh of a shape: an icosphere, the 8-vertex cube or a
    capped 32-segment cylinder.
    """
    shape = SyntheticShape.get(shape)
    if shape is SyntheticShape.Sphere:
        return _icosphere(ICOSPHERE_SUBDIVISIONS)
    if shape is SyntheticShape.Cube:
        return _cube_mesh()
    return _cylinder_mesh()


def generate_dataset(
    root: str | Path,
    classes: Sequence[str] = ("sphere", "cube", "cylinder"),
    per_class: int = 60,
    n_points: int = 2048,
    noise: float = 0.0,
    seed: int = 0,
    task: str = "classification",
    verbose: bool = False,
) -> DatasetManifest:
    """
    Writes a synthetic dataset of surface-sampled shapes and its manifest.

    Every class gets `per_class` clouds; the first two thirds are the train split,
    the rest the test split. The directory receives ``clouds/*.xyz``,
    ``labels/*.txt`` (part labels), ``meshes/<shape>.off`` and ``manifest.json``.
    The class id is the position of the shape in `classes` and doubles as the part
    category id. The same arguments always give identical files.

    Parameters
    ----------
    root:
        Output directory; created when missing.
    classes:
        Shape names, a subset of sphere, cube and cylinder without repetitions.
    per_class:
        Number of clouds per class.
    n_points:
        Points per cloud.
    noise:
        Standard deviation of the Gaussian coordinate noise.
    seed:
        Master seed; cloud i (counted over all classes) uses ``derive_seed(seed, i)``.
    task:
        Task written into the manifest: 'classification' or 'part_segmentation'.
    verbose:
        If True, show a progress bar.

    Returns
    -------
    DatasetManifest

    Raises
    ------
    UsageError
        For unknown or repeated shapes and non-positive counts.
    """
    shapes = [SyntheticShape.get(name) for name in classes]
    if len(shapes) == 0:
        raise UsageError("At least one class is required.")
    if len(set(shapes)) != len(shapes):
        raise UsageError(f"Classes must not repeat, got {list(classes)}.")
    if per_class < 1 or n_points < 1:
        raise UsageError(
            f"'per_class' and 'n_points' must be positive, got {per_class} and {n_points}."
        )

    root = Path(root)
    for folder in ("clouds", "labels", "meshes"):
        (root / folder).mkdir(parents=True, exist_ok=True)
    n_train = (2 * per_class) // 3
    if verbose:
        logging.info(
            f"Generating {per_class} clouds for each of {len(shapes)} classes in {root}."
        )

    pbar = tqdm(total=len(shapes) * per_class) if verbose else None
    entries = []
    for class_id, shape in enumerate(shapes):
        mesh_path = root / "meshes" / f"{shape.value}.off"
        write_mesh(shape_mesh(shape), mesh_path)
        for i in range(per_class):
            name = f"{shape.value}_{i:03d}"
            if pbar:
                pbar.update()
                pbar.set_description(f"Generate {name}")
            cloud, labels = sample_shape(
                shape, n_points, derive_seed(seed, class_id * per_class + i), noise
            )
            cloud_path = root / "clouds" / f"{name}.xyz"
            label_path = root / "labels" / f"{name}.txt"
            write_point_cloud(cloud, cloud_path)
            write_labels(labels, label_path)
            entries.append(
                ManifestEntry(
                    cloud=cloud_path,
                    class_id=class_id,
                    mesh=mesh_path,
                    labels=label_path,
                    split="train" if i < n_train else "test",
                )
            )
    if pbar:
        pbar.close()

    manifest = DatasetManifest(
        task=task,  # type: ignore[arg-type]
        classes=tuple(shape.value for shape in shapes),
        entries=tuple(entries),
        part_sets={class_id: shape.parts for class_id, shape in enumerate(shapes)},
    )
    write_manifest(manifest, root / "manifest.json")
    return manifest
