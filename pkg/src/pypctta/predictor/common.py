from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.common.cloud import PointCloud
from pypctta.exceptions import DimensionMismatch


class LogitMatrix:
    """
    Read-only matrix of logits: one row per point (n x C) or a single row of
    cloud-level logits (1 x C).
    """

    def __init__(self, values: ArrayLike):
        """
        Parameters
        ----------
        values:
            Array-like of shape (rows, C), or a C-vector for a single row.

        Raises
        ------
        ValueError
            If the values are not finite or not two-dimensional.
        """
        array = np.array(values, dtype=np.float64, copy=True)
        if array.ndim == 1:
            array = array.reshape(1, -1)
        if array.ndim != 2:
            raise ValueError(
                f"Expected logits of shape (rows, classes), but got {array.shape}."
            )
        if not np.all(np.isfinite(array)):
            raise ValueError("All logits must be finite.")
        array.setflags(write=False)
        self._values = array

    @property
    def values(self) -> NDArray[np.float64]:
        """The (rows, C) logits."""
        return self._values

    @property
    def n_rows(self) -> int:
        return int(self._values.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self._values.shape[1])

    def labels(self) -> NDArray[np.int64]:
        """Row-wise argmax; ties go to the lowest class index."""
        return np.argmax(self._values, axis=1).astype(np.int64)

    def __len__(self) -> int:
        return self.n_rows

    def __repr__(self) -> str:
        return f"LogitMatrix(n_rows={self.n_rows}, n_classes={self.n_classes})"


class _BasePredictor(ABC):
    """
    Inference interface of a point cloud model: a global feature extractor f and a
    classifier head g. Implementations are immutable after construction.
    """

    @property
    @abstractmethod
    def n_classes(self) -> int:
        """The number of classes C."""
        ...

    @property
    @abstractmethod
    def global_dim(self) -> int:
        """The dimension of the global feature."""
        ...

    @abstractmethod
    def extract_global_feature(self, cloud: PointCloud) -> NDArray[np.float64]:
        """Returns the permutation-invariant feature vector of a cloud."""
        ...

    @abstractmethod
    def classify_feature(self, feature: NDArray[np.float64]) -> LogitMatrix:
        """Applies the classifier head to a global feature."""
        ...

    @property
    def supports_segmentation(self) -> bool:
        return False

    def per_point_logits(self, cloud: PointCloud) -> LogitMatrix:
        raise NotImplementedError(
            f"{type(self).__name__} does not produce per-point logits."
        )

    def classify_logits(self, feature_or_cloud: PointCloud | ArrayLike) -> LogitMatrix:
        """
        Returns the 1 x C logits of a cloud or of an already extracted feature.

        Raises
        ------
        DimensionMismatch
            If a feature vector does not have `global_dim` entries.
        """
        if isinstance(feature_or_cloud, PointCloud):
            feature = self.extract_global_feature(feature_or_cloud)
        else:
            feature = np.asarray(feature_or_cloud, dtype=np.float64).reshape(-1)
        if feature.shape[0] != self.global_dim:
            raise DimensionMismatch(
                f"Expected a feature of dimension {self.global_dim}, "
                f"but got {feature.shape[0]}."
            )
        return self.classify_feature(feature)


def extract_global_feature(
    model: _BasePredictor, cloud: PointCloud
) -> NDArray[np.float64]:
    """Returns the global feature f(x) of a cloud."""
    return model.extract_global_feature(cloud)


def classify_logits(
    model: _BasePredictor, feature_or_cloud: PointCloud | ArrayLike
) -> LogitMatrix:
    """Returns the classification logits g(f(x)) as a 1 x C matrix."""
    return model.classify_logits(feature_or_cloud)


def per_point_logits(model: _BasePredictor, cloud: PointCloud) -> LogitMatrix:
    """Returns the n x C per-point logits of a cloud, rows in point order."""
    return model.per_point_logits(cloud)
