from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from pypctta.exceptions import EmptyInput, EmptyMatrix


class ConfusionMatrix:
    """
    C x C matrix of sample counts; rows are ground truth, columns predictions.

    Matrices of the same size add up, so partial matrices of a parallel
    evaluation can be merged.
    """

    def __init__(self, counts: ArrayLike):
        """
        Parameters
        ----------
        counts:
            Square array-like of non-negative integer counts.

        Raises
        ------
        ValueError
            If the matrix is not square or has negative entries.
        """
        array = np.array(counts, dtype=np.int64, copy=True)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"Expected a square matrix, but got shape {array.shape}.")
        if np.any(array < 0):
            raise ValueError("Confusion matrix entries must be non-negative.")
        array.setflags(write=False)
        self._counts = array

    @classmethod
    def from_labels(
        cls, ground_truth: ArrayLike, predicted: ArrayLike, n_classes: int
    ) -> ConfusionMatrix:
        """
        Counts (ground truth, prediction) pairs.

        Raises
        ------
        ValueError
            If the label arrays differ in length or a label is out of range.
        """
        gt = np.asarray(ground_truth, dtype=np.int64).reshape(-1)
        pred = np.asarray(predicted, dtype=np.int64).reshape(-1)
        if gt.shape != pred.shape:
            raise ValueError(
                f"Label arrays differ in length: {gt.shape[0]} and {pred.shape[0]}."
            )
        for name, labels in (("ground truth", gt), ("predicted", pred)):
            if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
                raise ValueError(f"All {name} labels must lie in 0..{n_classes - 1}.")
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (gt, pred), 1)
        return cls(counts)

    @property
    def counts(self) -> NDArray[np.int64]:
        return self._counts

    @property
    def n_classes(self) -> int:
        return int(self._counts.shape[0])

    @property
    def total(self) -> int:
        return int(self._counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        if other.n_classes != self.n_classes:
            raise ValueError(
                f"Cannot add confusion matrices of {self.n_classes} and {other.n_classes} classes."
            )
        return ConfusionMatrix(self._counts + other._counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return bool(np.array_equal(self._counts, other._counts))

    def __repr__(self) -> str:
        return f"ConfusionMatrix(n_classes={self.n_classes}, total={self.total})"

    def _require_samples(self) -> None:
        if self.total == 0:
            raise EmptyMatrix()

    def to_pandas(self) -> pd.DataFrame:
        """The matrix as a DataFrame indexed by ground truth, columns predictions."""
        labels = list(range(self.n_classes))
        return pd.DataFrame(
            self._counts,
            index=pd.Index(labels, name="ground_truth"),
            columns=pd.Index(labels, name="predicted"),
        )


def overall_accuracy(cm: ConfusionMatrix) -> float:
    """
    Fraction of correctly classified samples, trace / total.

    Raises
    ------
    EmptyMatrix
        If the matrix holds no samples.
    """
    cm._require_samples()
    return float(np.trace(cm.counts)) / float(cm.total)


def mean_class_accuracy(cm: ConfusionMatrix) -> float:
    """
    Mean over classes of the per-class accuracy. Classes without ground-truth
    samples are excluded.

    Raises
    ------
    EmptyMatrix
        If the matrix holds no samples.
    """
    cm._require_samples()
    rows = cm.counts.sum(axis=1)
    present = rows > 0
    return float(np.mean(np.diag(cm.counts)[present] / rows[present]))


def mean_iou(cm: ConfusionMatrix) -> float:
    """
    Mean over classes of tp / (tp + fp + fn). Classes absent from both ground
    truth and predictions are excluded.

    Raises
    ------
    EmptyMatrix
        If the matrix holds no samples.
    """
    cm._require_samples()
    tp = np.diag(cm.counts).astype(np.float64)
    union = cm.counts.sum(axis=0) + cm.counts.sum(axis=1) - tp
    present = union > 0
    return float(np.mean(tp[present] / union[present]))


@dataclass(frozen=True, eq=False)
class PartInstance:
    """
    Ground-truth and predicted part labels of one shape.
    """

    ground_truth: NDArray[np.int64]
    """Per-point ground-truth part labels."""
    predicted: NDArray[np.int64]
    """Per-point predicted part labels."""
    category: int
    """The category id of the shape."""
    parts: Tuple[int, ...]
    """The part labels valid for the category."""

    def __post_init__(self) -> None:
        gt = np.asarray(self.ground_truth, dtype=np.int64).reshape(-1)
        pred = np.asarray(self.predicted, dtype=np.int64).reshape(-1)
        if gt.shape != pred.shape:
            raise ValueError(
                f"Label arrays differ in length: {gt.shape[0]} and {pred.shape[0]}."
            )
        parts = tuple(int(p) for p in self.parts)
        if len(parts) == 0:
            raise ValueError("A category needs at least one part label.")
        valid = np.asarray(parts)
        for name, labels in (("ground truth", gt), ("predicted", pred)):
            if not np.all(np.isin(labels, valid)):
                raise ValueError(
                    f"All {name} labels must lie in the part set {parts} of category "
                    f"{self.category}."
                )
        object.__setattr__(self, "ground_truth", gt)
        object.__setattr__(self, "predicted", pred)
        object.__setattr__(self, "parts", parts)

    def iou(self) -> float:
        """
        Mean over the category's parts of tp / (tp + fp + fn); a part absent from
        both ground truth and prediction scores 1.
        """
        scores = []
        for part in self.parts:
            in_gt = self.ground_truth == part
            in_pred = self.predicted == part
            union = int(np.sum(in_gt | in_pred))
            if union == 0:
                scores.append(1.0)
            else:
                scores.append(int(np.sum(in_gt & in_pred)) / union)
        return float(np.mean(scores))


def part_iou(instances: Sequence[PartInstance]) -> Tuple[float, float]:
    """
    Instance and category mean IoU of part segmentations.

    Parameters
    ----------
    instances:
        The segmented shapes.

    Returns
    -------
    tuple
        (mInsIoU, mCatIoU): the mean instance IoU, and the mean over categories of
        the mean instance IoU within each category.

    Raises
    ------
    EmptyInput
        If there are no instances.
    """
    if len(instances) == 0:
        raise EmptyInput("part_iou needs at least one instance.")
    scores = [instance.iou() for instance in instances]
    per_category: Dict[int, List[float]] = {}
    for instance, score in zip(instances, scores):
        per_category.setdefault(instance.category, []).append(score)
    category_means = [
        float(np.mean(per_category[category])) for category in sorted(per_category)
    ]
    return float(np.mean(scores)), float(np.mean(category_means))
