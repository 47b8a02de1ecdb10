from __future__ import annotations

from typing import Iterable


class PcttaError(Exception):
    message = "An error occured while running the point cloud TTA pipeline."

    def __init__(self, message: str | None = None):
        super().__init__(message if message is not None else self.message)


class EmptyCloud(PcttaError, ValueError):
    message = "The point cloud contains no points."


class TooFewPoints(PcttaError, ValueError):
    message = "The point cloud contains too few points for this operation."


class InvalidEdge(PcttaError, ValueError):
    message = "The voxel edge length must be strictly positive."


class DegenerateNeighborhood(PcttaError, ValueError):
    message = "The neighborhood does not span a plane."


class EmptyMesh(PcttaError, ValueError):
    message = "The mesh contains no vertices."


class InsufficientDensity(PcttaError, ValueError):
    message = (
        "The dense cloud has fewer points than requested; "
        "voxel_edge or seed_band is too restrictive."
    )


class DimensionMismatch(PcttaError, ValueError):
    message = "Array dimensions do not match."


class MissingClass(PcttaError, ValueError):
    message = "At least one class has no examples."


class EmptyInput(PcttaError, ValueError):
    message = "The input is empty."


class EmptyMatrix(PcttaError, ValueError):
    message = "The confusion matrix contains no samples."


class UsageError(PcttaError, ValueError):
    message = "Invalid command-line usage."


class UnsupportedFormat(PcttaError, ValueError):
    message = "The file format is not supported."


class ParseError(PcttaError, ValueError):
    """
    Raised when a file cannot be parsed. Carries the location of the problem when
    it is known.
    """

    message = "The file could not be parsed."

    def __init__(
        self,
        message: str | None = None,
        path: str | None = None,
        line: int | None = None,
        offset: int | None = None,
    ):
        self.path = path
        self.line = line
        self.offset = offset

        location = []
        if path is not None:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if offset is not None:
            location.append(f"offset {offset}")

        text = message if message is not None else self.message
        if location:
            text = f"{', '.join(location)}: {text}"
        super().__init__(text)


class IoError(PcttaError, OSError):
    message = "The file could not be written."


class MissingFile(PcttaError, OSError):
    """Raised with the complete list of paths that could not be found."""

    message = "Required files are missing."

    def __init__(self, paths: Iterable[str]):
        self.paths = [str(p) for p in paths]
        super().__init__(f"missing file(s): {', '.join(self.paths)}")


class OutlierRemovalWarning(UserWarning):
    pass


class NonManifoldWarning(UserWarning):
    pass


class MissingNormalsWarning(UserWarning):
    pass
