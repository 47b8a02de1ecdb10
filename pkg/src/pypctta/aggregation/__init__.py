from pypctta.aggregation.config import AggregationMode, FeatureMode, TtaConfig
from pypctta.aggregation.main import (
    aggregate_logits,
    build_correspondence_features,
    classify_tta,
    combine_features,
    combine_point_logits,
    segment_tta,
)

__all__ = [
    "AggregationMode",
    "FeatureMode",
    "TtaConfig",
    "aggregate_logits",
    "build_correspondence_features",
    "classify_tta",
    "combine_features",
    "combine_point_logits",
    "segment_tta",
]
