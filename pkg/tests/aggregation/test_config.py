import pytest

from pypctta.aggregation.config import AggregationMode, FeatureMode, TtaConfig
from pypctta.augmentation.params import AugmentationMethod


def test_defaults() -> None:
    config = TtaConfig()
    assert config.method is AugmentationMethod.Upsample
    assert config.samples_m == 10
    assert config.feature_mode is FeatureMode.XyzPlusLogit
    assert config.agg_mode is AggregationMode.Avg
    assert config.neighbor_k == 1


def test_string_members_are_converted() -> None:
    config = TtaConfig(method="jitter", feature_mode="xyz", agg_mode="Max")
    assert config.method is AugmentationMethod.Jitter
    assert config.feature_mode is FeatureMode.XyzOnly
    assert config.agg_mode is AggregationMode.Max


@pytest.mark.parametrize(
    "kwargs",
    [
        {"samples_m": -1},
        {"neighbor_k": 0},
        {"logit_weight": -1.0},
        {"target_count": 0},
        {"mesh_oversample": 0},
        {"feature_mode": "rgb"},
        {"agg_mode": "median"},
    ],
)
def test_invalid_values(kwargs) -> None:
    with pytest.raises(ValueError):
        TtaConfig(**kwargs)


def test_invalid_types() -> None:
    with pytest.raises(TypeError):
        TtaConfig(samples_m=2.5)
    with pytest.raises(TypeError):
        TtaConfig(jitter=0.05)


def test_to_dict() -> None:
    document = TtaConfig(method="jitter", samples_m=4, master_seed=3).to_dict()
    assert document["method"] == "jitter"
    assert document["samples"] == 4
    assert document["params"] == {"master_seed": 3, "sigma": 0.05}

    upsample = TtaConfig().method_params()
    assert upsample["scale_r"] == 4.0
    assert "rng_seed" not in upsample
