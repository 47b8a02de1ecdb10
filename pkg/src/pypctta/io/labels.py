from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from pypctta.exceptions import IoError, MissingFile, ParseError


def read_labels(path: str | Path) -> NDArray[np.int64]:
    """
    Reads one non-negative integer label per line. Blank lines are ignored.

    Raises
    ------
    MissingFile
        If the file does not exist.
    ParseError
        If a line is not a non-negative integer; the error names the line.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile([str(path)])
    labels = []
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        token = raw.strip()
        if not token:
            continue
        try:
            label = int(token)
        except ValueError:
            raise ParseError(
                f"'{token}' is not an integer label.", path=str(path), line=number
            )
        if label < 0:
            raise ParseError(
                f"Labels must be non-negative, got {label}.", path=str(path), line=number
            )
        labels.append(label)
    return np.asarray(labels, dtype=np.int64)


def write_labels(labels: Sequence[int] | NDArray[np.integer], path: str | Path) -> None:
    """
    Writes one label per line.

    Raises
    ------
    IoError
        If the file cannot be written.
    """
    text = "".join(f"{int(label)}\n" for label in labels)
    try:
        Path(path).write_text(text)
    except OSError as error:
        raise IoError(f"Cannot write labels to {path}: {error}") from error
