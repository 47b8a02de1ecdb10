from __future__ import annotations

import logging
from typing import TYPE_CHECKING, List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import softmax

from pypctta.aggregation.config import AggregationMode, FeatureMode, TtaConfig
from pypctta.common.cloud import PointCloud
from pypctta.common.index import SpatialIndex
from pypctta.exceptions import DimensionMismatch, EmptyInput
from pypctta.predictor.common import LogitMatrix, _BasePredictor
from pypctta.results.tta_results import ClassificationResult, SegmentationResult
from pypctta.utils import map_ordered

if TYPE_CHECKING:
    from pypctta.augmentation.main import AugmentationSet


def classify_tta(
    model: _BasePredictor,
    augmentation_set: AugmentationSet,
    threads: int | None = None,
    verbose: bool = False,
) -> ClassificationResult:
    """
    Classifies a cloud from the average global feature of the original and the
    augmented clouds.

    The global features f(x_0)..f(x_M) are summed in cloud order and divided by
    M + 1; the classifier head maps the mean to the final logits.

    Parameters
    ----------
    model:
        The predictor.
    augmentation_set:
        The original and augmented clouds.
    threads:
        Worker count of the feature extraction.
    verbose:
        If True, log the stage.

    Returns
    -------
    ClassificationResult
    """
    clouds = augmentation_set.clouds
    if verbose:
        logging.info(f"Extracting global features of {len(clouds)} clouds.")
    features = map_ordered(model.extract_global_feature, clouds, threads)
    return combine_features(model, features)


def combine_features(
    model: _BasePredictor, features: Sequence[NDArray[np.float64]]
) -> ClassificationResult:
    """
    Classifies the mean of precomputed global features f(x_0)..f(x_M).

    Raises
    ------
    EmptyInput
        If there are no features.
    """
    if len(features) == 0:
        raise EmptyInput("At least the feature of the original cloud is required.")
    stacked = np.stack([np.asarray(f, dtype=np.float64).reshape(-1) for f in features])

    total = stacked[0].copy()
    for feature in stacked[1:]:
        total += feature
    mean = total / float(stacked.shape[0])

    final = model.classify_feature(mean).values
    cloud_logits = np.concatenate([model.classify_feature(f).values for f in stacked])
    return ClassificationResult(
        label=int(np.argmax(final[0])), logits=final, cloud_logits=cloud_logits
    )


def build_correspondence_features(
    cloud: PointCloud, logits: LogitMatrix | ArrayLike, config: TtaConfig
) -> NDArray[np.float64]:
    """
    Builds the feature matrix of the correspondence search.

    Parameters
    ----------
    cloud:
        The cloud.
    logits:
        Its n x C per-point logits.
    config:
        Selects the coordinates only, or the coordinates followed by the logits
        multiplied by `logit_weight`.

    Returns
    -------
    np.array
        (n, 3) or (n, 3 + C) features.

    Raises
    ------
    DimensionMismatch
        If the logit row count differs from the point count.
    """
    if isinstance(logits, LogitMatrix):
        values = logits.values
    else:
        values = np.asarray(logits, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != cloud.n_points:
        raise DimensionMismatch(
            f"Expected {cloud.n_points} logit rows, but got shape {values.shape}."
        )
    if config.feature_mode is FeatureMode.XyzOnly:
        return np.array(cloud.points, dtype=np.float64)
    return np.concatenate([cloud.points, config.logit_weight * values], axis=1)


def aggregate_logits(
    rows: ArrayLike, mode: AggregationMode | str
) -> NDArray[np.float64]:
    """
    Element-wise maximum or arithmetic mean of logit rows.

    Parameters
    ----------
    rows:
        (r, C) logit rows, r >= 1.
    mode:
        `AggregationMode.Max` or `AggregationMode.Avg`.

    Raises
    ------
    EmptyInput
        If there are no rows.
    """
    array = np.asarray(rows, dtype=np.float64)
    if array.size == 0 or array.shape[0] == 0:
        raise EmptyInput("Cannot aggregate an empty set of logit rows.")
    if array.ndim != 2:
        raise ValueError(f"Expected rows of shape (r, C), but got {array.shape}.")
    mode = AggregationMode.get(mode)
    if mode is AggregationMode.Max:
        return array.max(axis=0)
    total = array[0].copy()
    for row in array[1:]:
        total += row
    return total / float(array.shape[0])


def _matches(
    query_features: NDArray[np.float64],
    cloud: PointCloud,
    logits: LogitMatrix,
    config: TtaConfig,
) -> NDArray[np.int64]:
    features = build_correspondence_features(cloud, logits, config)
    indices, _ = SpatialIndex(features).query(query_features, config.neighbor_k)
    return indices


def segment_tta(
    model: _BasePredictor,
    augmentation_set: AugmentationSet,
    config: TtaConfig,
    threads: int | None = None,
    verbose: bool = False,
) -> SegmentationResult:
    """
    Per-point labels of the original cloud aggregated over the augmented clouds.

    Every point p of x_0 collects its own logit row and, for every augmented cloud,
    the rows of its `neighbor_k` nearest points in that cloud's correspondence
    feature space. The rows are reduced with `agg_mode`; the mean runs over the
    whole collection with the own row counted once. Labels are the row-wise
    argmax, ties to the lowest class index.

    Parameters
    ----------
    model:
        A predictor with per-point logits.
    augmentation_set:
        The original and augmented clouds.
    config:
        The feature mode, aggregation mode, neighbour count and logit weight.
    threads:
        Worker count of the inference and neighbour searches.
    verbose:
        If True, log the stages.

    Returns
    -------
    SegmentationResult
    """
    clouds = augmentation_set.clouds
    if verbose:
        logging.info(f"Computing per-point logits of {len(clouds)} clouds.")
    logits: List[LogitMatrix] = map_ordered(model.per_point_logits, clouds, threads)
    return combine_point_logits(
        clouds, logits, config, threads=threads, verbose=verbose
    )


def combine_point_logits(
    clouds: Sequence[PointCloud],
    logits: Sequence[LogitMatrix],
    config: TtaConfig,
    threads: int | None = None,
    verbose: bool = False,
) -> SegmentationResult:
    """
    Aggregates precomputed per-point logits of the clouds x_0..x_M onto x_0.

    See `segment_tta` for the correspondence and reduction rules.

    Raises
    ------
    DimensionMismatch
        If the cloud and logit counts differ.
    """
    if len(clouds) != len(logits) or len(clouds) == 0:
        raise DimensionMismatch(
            f"Expected one logit matrix per cloud, got {len(logits)} for {len(clouds)} clouds."
        )
    original = clouds[0]
    query = build_correspondence_features(original, logits[0], config)

    def match(k: int) -> NDArray[np.int64]:
        return _matches(query, clouds[k], logits[k], config)

    if verbose:
        logging.info(
            f"Matching {original.n_points} points in {len(clouds) - 1} clouds."
        )
    matches = map_ordered(match, range(1, len(clouds)), threads)

    def rows_of(k: int) -> NDArray[np.float64]:
        values = logits[k].values
        return softmax(values, axis=1) if config.use_probabilities else values

    others = [rows_of(k) for k in range(1, len(clouds))]
    aggregated, counts = _reduce(rows_of(0), others, matches, config.agg_mode)
    return SegmentationResult(
        labels=np.argmax(aggregated, axis=1).astype(np.int64),
        logits=aggregated,
        counts=counts,
    )


def _reduce(
    own: NDArray[np.float64],
    others: List[NDArray[np.float64]],
    matches: List[NDArray[np.int64]],
    mode: AggregationMode,
) -> Tuple[NDArray[np.float64], NDArray[np.int64]]:
    # rows are combined in a fixed order: own row, then cloud by cloud in rank order
    total = own.copy()
    counts = np.ones(own.shape[0], dtype=np.int64)
    for values, indices in zip(others, matches):
        for rank in range(indices.shape[1]):
            rows = values[indices[:, rank]]
            if mode is AggregationMode.Max:
                np.maximum(total, rows, out=total)
            else:
                total += rows
        counts += indices.shape[1]
    if mode is AggregationMode.Avg:
        total /= counts[:, None].astype(np.float64)
    return total, counts
