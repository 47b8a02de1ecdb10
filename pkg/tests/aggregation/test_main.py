import numpy as np
import pytest
from scipy.special import softmax

from pypctta.aggregation.config import TtaConfig
from pypctta.aggregation.main import (
    aggregate_logits,
    build_correspondence_features,
    classify_tta,
    combine_features,
    combine_point_logits,
    segment_tta,
)
from pypctta.augmentation.main import make_augmentations
from pypctta.common.cloud import PointCloud
from pypctta.exceptions import DimensionMismatch, EmptyInput


def _oracle(clouds, logits, config) -> np.ndarray:
    """Linear-scan correspondence search and in-order reduction."""

    def features(k):
        if config.feature_mode.value == "xyz":
            return clouds[k].points
        return np.concatenate(
            [clouds[k].points, config.logit_weight * logits[k]], axis=1
        )

    query = features(0)
    result = np.empty_like(logits[0])
    for i in range(query.shape[0]):
        total = logits[0][i].copy()
        count = 1
        for k in range(1, len(clouds)):
            candidates = features(k)
            diff = candidates - query[i]
            distances = np.sqrt(np.sum(diff * diff, axis=-1))
            order = np.lexsort((np.arange(distances.shape[0]), distances))
            for j in order[: config.neighbor_k]:
                if config.agg_mode.value == "max":
                    total = np.maximum(total, logits[k][j])
                else:
                    total = total + logits[k][j]
                count += 1
        result[i] = total if config.agg_mode.value == "max" else total / count
    return result


@pytest.mark.parametrize("samples_m", [1, 5, 10])
def test_classify_identity_matches_baseline(
    small_model, random_cloud, samples_m
) -> None:
    config = TtaConfig(method="copy", samples_m=samples_m)
    result = classify_tta(small_model, make_augmentations(random_cloud, config))

    baseline = small_model.classify_logits(random_cloud).values
    assert np.allclose(result.logits, baseline, rtol=0.0, atol=1e-6)
    assert result.label == result.baseline_label
    assert result.cloud_logits.shape == (samples_m + 1, 4)


def test_classify_without_augmentation_is_exact(small_model, random_cloud) -> None:
    config = TtaConfig(method="jitter", samples_m=0)
    result = classify_tta(small_model, make_augmentations(random_cloud, config))
    baseline = small_model.classify_logits(random_cloud).values
    assert np.array_equal(result.logits, baseline)


def test_classify_averages_features(small_model, random_cloud) -> None:
    config = TtaConfig(method="jitter", samples_m=3, master_seed=2)
    augmentation_set = make_augmentations(random_cloud, config)
    features = [small_model.extract_global_feature(c) for c in augmentation_set.clouds]

    result = classify_tta(small_model, augmentation_set, threads=2)
    expected = small_model.classify_feature(np.mean(features, axis=0)).values
    assert np.allclose(result.logits, expected, rtol=0.0, atol=1e-12)


def test_combine_features_empty(small_model) -> None:
    with pytest.raises(EmptyInput):
        combine_features(small_model, [])


@pytest.mark.parametrize("agg_mode", ["max", "avg"])
@pytest.mark.parametrize("feature_mode", ["xyz", "xyz+logit"])
def test_segment_identity_matches_baseline(
    small_model, random_cloud, agg_mode, feature_mode
) -> None:
    config = TtaConfig(
        method="copy", samples_m=3, agg_mode=agg_mode, feature_mode=feature_mode
    )
    result = segment_tta(small_model, make_augmentations(random_cloud, config), config)

    baseline = small_model.per_point_logits(random_cloud)
    assert np.allclose(result.logits, baseline.values, rtol=0.0, atol=1e-12)
    assert np.array_equal(result.labels, baseline.labels())
    assert np.all(result.counts == 4)


@pytest.mark.parametrize("neighbor_k", [1, 3])
@pytest.mark.parametrize("agg_mode", ["max", "avg"])
@pytest.mark.parametrize("feature_mode", ["xyz", "xyz+logit"])
def test_segment_matches_linear_scan(
    small_model, feature_mode, agg_mode, neighbor_k
) -> None:
    config = TtaConfig(
        method="jitter",
        samples_m=3,
        feature_mode=feature_mode,
        agg_mode=agg_mode,
        neighbor_k=neighbor_k,
    )
    for instance in range(50):
        rng = np.random.default_rng(instance)
        cloud = PointCloud(rng.uniform(-1.0, 1.0, size=(128, 3)))
        augmentation_set = make_augmentations(
            cloud, TtaConfig(method="jitter", samples_m=3, master_seed=instance)
        )
        logits = [
            small_model.per_point_logits(c).values for c in augmentation_set.clouds
        ]

        result = segment_tta(small_model, augmentation_set, config)
        expected = _oracle(augmentation_set.clouds, logits, config)

        assert np.allclose(result.logits, expected, rtol=0.0, atol=1e-9)
        assert np.array_equal(result.labels, np.argmax(expected, axis=1))
        assert np.all(result.counts == 1 + 3 * neighbor_k)


def test_segment_is_independent_of_thread_count(small_model, sphere_cloud) -> None:
    config = TtaConfig(method="jitter", samples_m=4, neighbor_k=2)
    augmentation_set = make_augmentations(sphere_cloud, config)
    single = segment_tta(small_model, augmentation_set, config, threads=1)
    many = segment_tta(small_model, augmentation_set, config, threads=4)
    assert np.array_equal(single.logits, many.logits)


def test_segment_probabilities(small_model, random_cloud) -> None:
    config = TtaConfig(method="copy", samples_m=2, use_probabilities=True)
    result = segment_tta(small_model, make_augmentations(random_cloud, config), config)

    expected = softmax(small_model.per_point_logits(random_cloud).values, axis=1)
    assert np.allclose(result.logits, expected, rtol=0.0, atol=1e-12)
    assert np.allclose(result.logits.sum(axis=1), 1.0)


def test_combine_point_logits_mismatch(small_model, random_cloud) -> None:
    logits = small_model.per_point_logits(random_cloud)
    with pytest.raises(DimensionMismatch):
        combine_point_logits([random_cloud, random_cloud], [logits], TtaConfig())


def test_build_correspondence_features(random_cloud) -> None:
    logits = np.ones((128, 4))
    weighted = build_correspondence_features(
        random_cloud, logits, TtaConfig(logit_weight=0.5)
    )
    assert weighted.shape == (128, 7)
    assert np.array_equal(weighted[:, 3:], np.full((128, 4), 0.5))

    config = TtaConfig(feature_mode="xyz")
    xyz = build_correspondence_features(random_cloud, logits, config)
    assert np.array_equal(xyz, random_cloud.points)

    with pytest.raises(DimensionMismatch):
        build_correspondence_features(random_cloud, logits[:10], TtaConfig())


def test_aggregate_logits() -> None:
    rows = [[1.0, 5.0], [3.0, 2.0]]
    assert np.array_equal(aggregate_logits(rows, "max"), [3.0, 5.0])
    assert np.array_equal(aggregate_logits(rows, "avg"), [2.0, 3.5])
    with pytest.raises(EmptyInput):
        aggregate_logits(np.empty((0, 2)), "avg")
