from __future__ import annotations

from pathlib import Path

from pypctta.exceptions import MissingFile
from pypctta.predictor.centroid import (
    CentroidClassifier,
    fit_centroid_classifier,
    radial_histogram,
)
from pypctta.predictor.common import (
    LogitMatrix,
    _BasePredictor,
    classify_logits,
    extract_global_feature,
    per_point_logits,
)
from pypctta.predictor.mlp import MlpPredictor, load_predictor, save_predictor


def load_model(path: str | Path) -> _BasePredictor:
    """
    Loads a model file: a centroid classifier JSON document or an MLP weights file.

    Raises
    ------
    MissingFile
        If the file does not exist.
    ParseError
        If the file cannot be parsed.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile([str(path)])
    with path.open("rb") as file:
        head = file.read(1)
    if head == b"{":
        return CentroidClassifier.from_json(path)
    return load_predictor(path)


__all__ = [
    "CentroidClassifier",
    "LogitMatrix",
    "MlpPredictor",
    "classify_logits",
    "extract_global_feature",
    "fit_centroid_classifier",
    "load_model",
    "load_predictor",
    "per_point_logits",
    "radial_histogram",
    "save_predictor",
]
