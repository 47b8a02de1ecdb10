from __future__ import annotations  # noqa: F404

from dataclasses import dataclass
from enum import Enum
from typing import List

from natsort import natsorted

from pypctta.exceptions import UsageError


@dataclass(frozen=True)
class MetricDefinition:
    """
    Dataclass containing the name, unit and display label of an evaluation metric.
    """

    name: str
    """The key of the metric in reports."""
    unit: str
    """The unit of the metric."""
    label: str
    """The human readable label, used in figures."""
    task: str
    """The task the metric applies to: 'classification' or 'part_segmentation'."""

    def __post_init__(self) -> None:
        for field_name in ("name", "unit", "label", "task"):
            value = getattr(self, field_name)
            if not isinstance(value, str):
                raise TypeError(
                    f"Expected type 'str' for '{field_name}', but got {type(value)}"
                )


class MetricDefinitions(Enum):
    """
    Enumeration of the evaluation metrics.
    """

    oAcc = MetricDefinition(
        name="oAcc", unit="-", label="overall accuracy", task="classification"
    )
    mAcc = MetricDefinition(
        name="mAcc", unit="-", label="mean class accuracy", task="classification"
    )
    mIoU = MetricDefinition(
        name="mIoU", unit="-", label="mean IoU", task="part_segmentation"
    )
    mInsIoU = MetricDefinition(
        name="mInsIoU", unit="-", label="instance mIoU", task="part_segmentation"
    )
    mCatIoU = MetricDefinition(
        name="mCatIoU", unit="-", label="category mIoU", task="part_segmentation"
    )

    @classmethod
    def get(cls, name: str) -> MetricDefinitions:
        """Returns the metric definition of the given name."""
        try:
            return cls[name]
        except KeyError:
            raise UsageError(
                f"Metric with name '{name}' not found in 'MetricDefinitions'. "
                f"Select from {cls.natsorted_names()}."
            )

    @classmethod
    def for_task(cls, task: str) -> List[MetricDefinitions]:
        """Returns the metrics reported for a task, in definition order."""
        return [metric for metric in cls if metric.value.task == task]

    @classmethod
    def natsorted_names(cls) -> List[str]:
        """Returns the names of the enum in natsorted order."""
        return natsorted([r.name for r in cls])
