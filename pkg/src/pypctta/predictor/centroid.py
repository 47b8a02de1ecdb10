from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.common.cloud import PointCloud, normalize_unit_sphere
from pypctta.exceptions import (
    DimensionMismatch,
    EmptyInput,
    IoError,
    MissingClass,
    MissingFile,
    ParseError,
)
from pypctta.predictor.common import LogitMatrix, _BasePredictor

DEFAULT_BINS = 16
FORMAT_NAME = "pctta-centroid-classifier"


def radial_histogram(
    cloud: PointCloud, bins: int = DEFAULT_BINS
) -> NDArray[np.float64]:
    """
    Normalized histogram of the point radii of the unit-sphere-normalized cloud.

    Parameters
    ----------
    cloud:
        The non-empty cloud.
    bins:
        The number of equal-width bins over [0, 1].

    Returns
    -------
    np.array
        (bins,) probability vector.

    Raises
    ------
    EmptyCloud
        If the cloud has no points.
    """
    if bins < 1:
        raise ValueError(f"bins must be a positive integer, but got {bins}.")
    normalized, _ = normalize_unit_sphere(cloud)
    radii = np.sqrt(np.sum(normalized.points * normalized.points, axis=1))
    counts, _ = np.histogram(np.clip(radii, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    return counts / float(cloud.n_points)


class CentroidClassifier(_BasePredictor):
    """
    Training-free nearest-centroid classifier over radial histograms.

    The global feature of a cloud is its `radial_histogram`; the logit of class c
    is the negative Euclidean distance between the feature and the centroid of c.
    """

    def __init__(self, centroids: ArrayLike):
        """
        Parameters
        ----------
        centroids:
            (C, B) per-class mean histograms; every row sums to 1.

        Raises
        ------
        ValueError
            If a row is not a probability vector.
        """
        array = np.array(centroids, dtype=np.float64, copy=True)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError(
                f"Expected centroids of shape (classes, bins), but got {array.shape}."
            )
        if np.any(array < 0) or np.any(np.abs(array.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("Every centroid must be a probability vector.")
        array.setflags(write=False)
        self._centroids = array

    @property
    def centroids(self) -> NDArray[np.float64]:
        return self._centroids

    @property
    def bins(self) -> int:
        return int(self._centroids.shape[1])

    @property
    def n_classes(self) -> int:
        return int(self._centroids.shape[0])

    @property
    def global_dim(self) -> int:
        return self.bins

    def __repr__(self) -> str:
        return f"CentroidClassifier(n_classes={self.n_classes}, bins={self.bins})"

    def extract_global_feature(self, cloud: PointCloud) -> NDArray[np.float64]:
        return radial_histogram(cloud, self.bins)

    def classify_feature(self, feature: NDArray[np.float64]) -> LogitMatrix:
        feature = np.asarray(feature, dtype=np.float64).reshape(-1)
        if feature.shape[0] != self.bins:
            raise DimensionMismatch(
                f"Expected a histogram with {self.bins} bins, but got {feature.shape[0]}."
            )
        diff = self._centroids - feature
        return LogitMatrix(-np.sqrt(np.sum(diff * diff, axis=1)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": FORMAT_NAME,
            "bins": self.bins,
            "centroids": self._centroids.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> CentroidClassifier:
        if data.get("format") != FORMAT_NAME:
            raise ParseError(
                f"Expected format '{FORMAT_NAME}', got {data.get('format')!r}."
            )
        centroids = np.asarray(data["centroids"], dtype=np.float64)
        if centroids.ndim != 2 or centroids.shape[1] != data["bins"]:
            raise DimensionMismatch(
                f"Centroids of shape {centroids.shape} do not match {data['bins']} bins."
            )
        return cls(centroids)

    def to_json(self, path: str | Path) -> None:
        """
        Writes the classifier as JSON.

        Raises
        ------
        IoError
            If the file cannot be written.
        """
        try:
            Path(path).write_text(json.dumps(self.to_dict(), indent=2))
        except OSError as error:
            raise IoError(f"Cannot write classifier to {path}: {error}") from error

    @classmethod
    def from_json(cls, path: str | Path) -> CentroidClassifier:
        """
        Reads a classifier written by `to_json`.

        Raises
        ------
        MissingFile
            If the file does not exist.
        ParseError
            If the file is not a classifier JSON document.
        """
        path = Path(path)
        if not path.is_file():
            raise MissingFile([str(path)])
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as error:
            raise ParseError(error.msg, path=str(path), line=error.lineno) from error
        if not isinstance(data, dict):
            raise ParseError("Expected a JSON object.", path=str(path))
        try:
            return cls.from_dict(data)
        except KeyError as error:
            raise ParseError(f"Missing key {error}.", path=str(path)) from error


def fit_centroid_classifier(
    dataset: Sequence[Tuple[PointCloud, int]],
    bins: int = DEFAULT_BINS,
    n_classes: int | None = None,
) -> CentroidClassifier:
    """
    Fits the per-class mean radial histograms of a labelled dataset.

    Parameters
    ----------
    dataset:
        (cloud, class label) pairs with labels in 0..C-1.
    bins:
        The number of histogram bins.
    n_classes:
        The number of classes C; defaults to the largest label plus one.

    Returns
    -------
    CentroidClassifier

    Raises
    ------
    EmptyInput
        If the dataset is empty.
    MissingClass
        If a class in 0..C-1 has no example.
    """
    if len(dataset) == 0:
        raise EmptyInput("Cannot fit a classifier on an empty dataset.")
    labels = np.array([int(label) for _, label in dataset], dtype=np.int64)
    if np.any(labels < 0):
        raise ValueError("Class labels must be non-negative.")
    n_classes = int(labels.max()) + 1 if n_classes is None else n_classes

    sums = np.zeros((n_classes, bins))
    counts = np.zeros(n_classes, dtype=np.int64)
    for cloud, label in dataset:
        if label >= n_classes:
            raise ValueError(f"Label {label} exceeds the class count {n_classes}.")
        sums[label] += radial_histogram(cloud, bins)
        counts[label] += 1

    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise MissingClass(
            f"Classes without examples: {', '.join(str(c) for c in missing)}."
        )
    return CentroidClassifier(sums / counts[:, None])
