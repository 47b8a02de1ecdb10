from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Tuple

from natsort import natsorted

from pypctta.exceptions import IoError, MissingFile, ParseError

Task = Literal["classification", "part_segmentation"]
TASKS = ("classification", "part_segmentation")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    """A single shape of a dataset."""

    cloud: Path
    """The point cloud file."""
    class_id: int
    """The class id; for part segmentation also the category id."""
    mesh: Path | None = None
    """Optional mesh of the shape."""
    labels: Path | None = None
    """Optional per-point part labels."""
    split: str | None = None
    """Optional split name, 'train' or 'test'."""

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise ValueError(
                f"'class_id' must be non-negative, but got {self.class_id}."
            )
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(
                f"'split' must be one of {SPLITS}, but got '{self.split}'."
            )

    def paths(self) -> List[Path]:
        return [p for p in (self.cloud, self.mesh, self.labels) if p is not None]


@dataclass(frozen=True)
class DatasetManifest:
    """
    A dataset: its task, class names, part sets and entries with resolved paths.
    """

    task: Task
    """'classification' or 'part_segmentation'."""
    classes: Tuple[str, ...]
    """Class names; the position is the class id."""
    entries: Tuple[ManifestEntry, ...]
    """The shapes, in manifest order."""
    part_sets: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    """Valid part labels per category id; required for part segmentation."""

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"'task' must be one of {TASKS}, but got '{self.task}'.")
        for i, entry in enumerate(self.entries):
            if entry.class_id >= len(self.classes):
                raise ValueError(
                    f"Entry {i} has class id {entry.class_id}, but only "
                    f"{len(self.classes)} classes are declared."
                )
        seen: Dict[int, int] = {}
        for category, parts in self.part_sets.items():
            if len(parts) == 0:
                raise ValueError(f"Category {category} has an empty part set.")
            for part in parts:
                if part in seen and seen[part] != category:
                    raise ValueError(
                        f"Part label {part} belongs to categories {seen[part]} and {category}."
                    )
                seen[part] = category
        if self.task == "part_segmentation":
            if not self.part_sets:
                raise ValueError("A part segmentation manifest needs part sets.")
            for i, entry in enumerate(self.entries):
                if entry.labels is None:
                    raise ValueError(f"Entry {i} has no label file.")
                if entry.class_id not in self.part_sets:
                    raise ValueError(
                        f"Entry {i}: category {entry.class_id} has no part set."
                    )

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_parts(self) -> int:
        """One more than the largest part label."""
        return max((max(parts) for parts in self.part_sets.values()), default=-1) + 1

    def select(self, split: str | None) -> List[ManifestEntry]:
        """Returns the entries of a split, or all entries for None."""
        if split is None:
            return list(self.entries)
        if split not in SPLITS:
            raise ValueError(f"'split' must be one of {SPLITS}, but got '{split}'.")
        return [entry for entry in self.entries if entry.split == split]

    def missing_paths(self) -> List[str]:
        return [
            str(p) for entry in self.entries for p in entry.paths() if not p.is_file()
        ]

    def to_dict(self, root: Path) -> Dict[str, Any]:
        """JSON document with paths relative to `root` where possible."""

        def rel(path: Path | None) -> str | None:
            if path is None:
                return None
            try:
                return Path(os.path.relpath(path, root)).as_posix()
            except ValueError:
                return str(path)

        entries = []
        for entry in self.entries:
            item: Dict[str, Any] = {"cloud": rel(entry.cloud), "class": entry.class_id}
            for key, value in (("mesh", entry.mesh), ("labels", entry.labels)):
                if value is not None:
                    item[key] = rel(value)
            if entry.split is not None:
                item["split"] = entry.split
            entries.append(item)

        document: Dict[str, Any] = {"task": self.task, "classes": list(self.classes)}
        if self.part_sets:
            document["part_sets"] = {
                str(key): list(self.part_sets[key])
                for key in natsorted(self.part_sets.keys())
            }
        document["entries"] = entries
        return document


def _entry(item: Any, index: int, root: Path) -> ManifestEntry:
    if not isinstance(item, dict):
        raise ParseError(f"Entry {index} is not a JSON object.")
    if "cloud" not in item or "class" not in item:
        raise ParseError(f"Entry {index} needs the keys 'cloud' and 'class'.")

    def resolve(value: Any) -> Path | None:
        if value is None:
            return None
        if not isinstance(value, str):
            raise ParseError(f"Entry {index}: paths must be strings.")
        path = Path(value)
        return path if path.is_absolute() else root / path

    try:
        return ManifestEntry(
            cloud=resolve(item["cloud"]),  # type: ignore[arg-type]
            class_id=int(item["class"]),
            mesh=resolve(item.get("mesh")),
            labels=resolve(item.get("labels")),
            split=item.get("split"),
        )
    except (TypeError, ValueError) as error:
        raise ParseError(f"Entry {index}: {error}")


def read_manifest(path: str | Path, check_files: bool = True) -> DatasetManifest:
    """
    Reads and validates a JSON dataset manifest.

    The document holds ``task``, ``classes`` (names), optional ``part_sets``
    (category id to part labels; required for part segmentation) and ``entries``
    with ``cloud``, ``class`` and the optional ``mesh``, ``labels`` and ``split``.
    Relative paths are resolved against the directory of the manifest.

    Parameters
    ----------
    path:
        The manifest file.
    check_files:
        If True, every referenced file must exist.

    Raises
    ------
    MissingFile
        Listing every referenced file that does not exist.
    ParseError
        If the document is not valid JSON or violates the schema.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile([str(path)])
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as error:
        raise ParseError(error.msg, path=str(path), line=error.lineno) from error
    if not isinstance(document, dict):
        raise ParseError("The manifest must be a JSON object.", path=str(path))

    root = path.parent
    try:
        classes = tuple(str(name) for name in document["classes"])
        raw_entries = document["entries"]
        task = document["task"]
    except KeyError as error:
        raise ParseError(f"Missing key {error}.", path=str(path)) from error
    if not isinstance(raw_entries, list):
        raise ParseError("'entries' must be a list.", path=str(path))

    try:
        part_sets = {
            int(key): tuple(int(part) for part in parts)
            for key, parts in document.get("part_sets", {}).items()
        }
        entries = tuple(_entry(item, i, root) for i, item in enumerate(raw_entries))
        manifest = DatasetManifest(
            task=task, classes=classes, entries=entries, part_sets=part_sets
        )
    except ParseError as error:
        raise ParseError(str(error), path=str(path)) from error
    except (TypeError, ValueError, AttributeError) as error:
        raise ParseError(str(error), path=str(path)) from error

    if check_files:
        missing = manifest.missing_paths()
        if missing:
            raise MissingFile(missing)
    return manifest


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """
    Writes a manifest as JSON with paths relative to its directory.

    Raises
    ------
    IoError
        If the file cannot be written.
    """
    path = Path(path)
    document = manifest.to_dict(path.parent.resolve())
    try:
        path.write_text(json.dumps(document, indent=2) + "\n")
    except OSError as error:
        raise IoError(f"Cannot write manifest to {path}: {error}") from error
