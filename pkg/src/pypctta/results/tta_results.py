from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import pandas as pd
from numpy.typing import NDArray


@dataclass(frozen=True, eq=False)
class ClassificationResult:
    """
    *Not meant to be instantiated by the user.* Returned by `classify_tta`.
    """

    label: int
    """The predicted class, the argmax of `logits` (lowest index on ties)."""
    logits: NDArray[np.float64]
    """The (1, C) final logits of the averaged global feature."""
    cloud_logits: NDArray[np.float64]
    """The (M + 1, C) logits of every cloud on its own; row 0 is the original."""

    def __post_init__(self) -> None:
        if self.logits.ndim != 2 or self.logits.shape[0] != 1:
            raise ValueError(
                f"Expected logits of shape (1, C), got {self.logits.shape}."
            )
        if (
            self.cloud_logits.ndim != 2
            or self.cloud_logits.shape[1] != self.logits.shape[1]
        ):
            raise ValueError(
                f"Expected per-cloud logits with {self.logits.shape[1]} columns, "
                f"got shape {self.cloud_logits.shape}."
            )
        if self.label != int(np.argmax(self.logits[0])):
            raise ValueError("The label must be the argmax of the final logits.")

    @property
    def n_classes(self) -> int:
        return int(self.logits.shape[1])

    @property
    def baseline_label(self) -> int:
        """The label of the original cloud without augmentation."""
        return int(np.argmax(self.cloud_logits[0]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "logits": self.logits[0].tolist(),
            "cloud_logits": self.cloud_logits.tolist(),
        }

    def to_pandas(self) -> pd.DataFrame:
        """Per-cloud logits, one row per cloud x_0..x_M."""
        return pd.DataFrame(
            self.cloud_logits,
            index=pd.Index(
                [f"x_{k}" for k in range(self.cloud_logits.shape[0])], name="cloud"
            ),
            columns=[f"logit_{c}" for c in range(self.n_classes)],
        )


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    """
    *Not meant to be instantiated by the user.* Returned by `segment_tta`.
    """

    labels: NDArray[np.int64]
    """The (n,) per-point labels, the row-wise argmax of `logits`."""
    logits: NDArray[np.float64]
    """The (n, C) aggregated per-point logits."""
    counts: NDArray[np.int64]
    """The (n,) number of collected rows per point, including its own row."""

    def __post_init__(self) -> None:
        n = self.labels.shape[0]
        if (
            self.logits.ndim != 2
            or self.logits.shape[0] != n
            or self.counts.shape != (n,)
        ):
            raise ValueError(
                "Inputs for SegmentationResult must have the same lengths, but got "
                f"labels {self.labels.shape}, logits {self.logits.shape}, counts {self.counts.shape}."
            )
        if np.any(self.counts < 1):
            raise ValueError("Every point collects at least its own logit row.")
        if not np.array_equal(self.labels, np.argmax(self.logits, axis=1)):
            raise ValueError("The labels must be the row-wise argmax of the logits.")

    @property
    def n_points(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.logits.shape[1])

    def to_pandas(self) -> pd.DataFrame:
        """One row per point with its label, count and aggregated logits."""
        frame = pd.DataFrame(
            self.logits, columns=[f"logit_{c}" for c in range(self.n_classes)]
        )
        frame.insert(0, "count", self.counts)
        frame.insert(0, "label", self.labels)
        return frame
