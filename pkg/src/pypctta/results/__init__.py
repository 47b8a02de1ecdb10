from pypctta.results.metrics import (
    ConfusionMatrix,
    PartInstance,
    mean_class_accuracy,
    mean_iou,
    overall_accuracy,
    part_iou,
)
from pypctta.results.result_definitions import MetricDefinition, MetricDefinitions
from pypctta.results.tta_results import ClassificationResult, SegmentationResult

__all__ = [
    "ClassificationResult",
    "ConfusionMatrix",
    "MetricDefinition",
    "MetricDefinitions",
    "PartInstance",
    "SegmentationResult",
    "mean_class_accuracy",
    "mean_iou",
    "overall_accuracy",
    "part_iou",
]
