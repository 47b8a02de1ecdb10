import numpy as np
import pytest

from pypctta.results.tta_results import ClassificationResult, SegmentationResult


def test_classification_result() -> None:
    result = ClassificationResult(
        label=1,
        logits=np.array([[0.1, 0.7, 0.2]]),
        cloud_logits=np.array([[0.9, 0.0, 0.1], [0.0, 1.0, 0.0]]),
    )
    assert result.n_classes == 3
    assert result.baseline_label == 0
    assert result.to_dict()["logits"] == [0.1, 0.7, 0.2]
    frame = result.to_pandas()
    assert list(frame.index) == ["x_0", "x_1"]
    assert list(frame.columns) == ["logit_0", "logit_1", "logit_2"]


def test_classification_result_validation() -> None:
    with pytest.raises(ValueError, match="argmax"):
        ClassificationResult(
            label=0, logits=np.array([[0.0, 1.0]]), cloud_logits=np.zeros((1, 2))
        )
    with pytest.raises(ValueError, match="columns"):
        ClassificationResult(
            label=1, logits=np.array([[0.0, 1.0]]), cloud_logits=np.zeros((1, 3))
        )


def test_segmentation_result() -> None:
    result = SegmentationResult(
        labels=np.array([1, 0]),
        logits=np.array([[0.0, 2.0], [1.0, -1.0]]),
        counts=np.array([4, 4]),
    )
    assert result.n_points == 2
    assert result.n_classes == 2
    frame = result.to_pandas()
    assert list(frame.columns) == ["label", "count", "logit_0", "logit_1"]
    assert frame["label"].tolist() == [1, 0]


def test_segmentation_result_validation() -> None:
    with pytest.raises(ValueError, match="same lengths"):
        SegmentationResult(
            labels=np.array([0]), logits=np.zeros((2, 2)), counts=np.array([1, 1])
        )
    with pytest.raises(ValueError, match="own logit row"):
        SegmentationResult(
            labels=np.array([0]), logits=np.zeros((1, 2)), counts=np.array([0])
        )
