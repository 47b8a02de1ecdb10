from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict

from pypctta.augmentation.params import AugmentationMethod, JitterParams, UpsampleParams


class FeatureMode(Enum):
    """Feature space of the correspondence search between clouds."""

    XyzOnly = "xyz"
    XyzPlusLogit = "xyz+logit"

    @classmethod
    def get(cls, item: str | FeatureMode) -> FeatureMode:
        if isinstance(item, cls):
            return item
        for member in cls:
            if item in (member.name, member.value):
                return member
        raise ValueError(
            f"{item} is not a valid feature mode. Select from {[m.value for m in cls]}."
        )


class AggregationMode(Enum):
    """Reduction of the collected logit rows of a point."""

    Max = "max"
    Avg = "avg"

    @classmethod
    def get(cls, item: str | AggregationMode) -> AggregationMode:
        if isinstance(item, cls):
            return item
        for member in cls:
            if item in (member.name, member.value):
                return member
        raise ValueError(
            f"{item} is not a valid aggregation mode. Select from {[m.value for m in cls]}."
        )


@dataclass(frozen=True)
class TtaConfig:
    """
    Configuration of a test-time augmentation run.
    """

    method: AugmentationMethod = AugmentationMethod.Upsample
    """The augmentation method."""
    samples_m: int = 10
    """The number of augmented clouds M."""
    feature_mode: FeatureMode = FeatureMode.XyzPlusLogit
    """Feature space of the segmentation correspondence search."""
    agg_mode: AggregationMode = AggregationMode.Avg
    """Reduction of the collected per-point logits."""
    neighbor_k: int = 1
    """The number of corresponding points per augmented cloud."""
    logit_weight: float = 1.0
    """Scale of the logit block in the correspondence features."""
    use_probabilities: bool = False
    """Aggregate softmax probabilities instead of raw logits."""
    master_seed: int = 0
    """Master seed of the per-cloud seeds."""
    target_count: int | None = None
    """Point count of resampled augmented clouds; None keeps the input count."""
    jitter: JitterParams = field(default_factory=JitterParams)
    """Parameters of the jitter method."""
    upsample: UpsampleParams = field(default_factory=UpsampleParams)
    """Parameters of the upsample method."""
    mesh_oversample: int = 2
    """Mesh vertices drawn per output point before farthest point resampling."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", AugmentationMethod.get(self.method))
        object.__setattr__(self, "feature_mode", FeatureMode.get(self.feature_mode))
        object.__setattr__(self, "agg_mode", AggregationMode.get(self.agg_mode))

        for name in ("samples_m", "neighbor_k", "master_seed", "mesh_oversample"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(
                    f"Expected type 'int' for '{name}', but got {type(value)}"
                )
        if self.samples_m < 0:
            raise ValueError(
                f"'samples_m' must be non-negative, but got {self.samples_m}."
            )
        if self.neighbor_k < 1:
            raise ValueError(f"'neighbor_k' must be >= 1, but got {self.neighbor_k}.")
        if self.mesh_oversample < 1:
            raise ValueError(
                f"'mesh_oversample' must be >= 1, but got {self.mesh_oversample}."
            )
        if not (
            isinstance(self.logit_weight, (int, float))
            and math.isfinite(self.logit_weight)
            and self.logit_weight >= 0
        ):
            raise ValueError(
                f"'logit_weight' must be a non-negative number, but got {self.logit_weight!r}."
            )
        if self.target_count is not None and (
            isinstance(self.target_count, bool)
            or not isinstance(self.target_count, int)
            or self.target_count < 1
        ):
            raise ValueError(
                f"'target_count' must be a positive integer or None, but got {self.target_count!r}."
            )
        if not isinstance(self.jitter, JitterParams):
            raise TypeError(
                f"Expected type 'JitterParams' for 'jitter', but got {type(self.jitter)}"
            )
        if not isinstance(self.upsample, UpsampleParams):
            raise TypeError(
                f"Expected type 'UpsampleParams' for 'upsample', but got {type(self.upsample)}"
            )

    def method_params(self) -> Dict[str, Any]:
        """The parameters of the configured method, for provenance records."""
        params: Dict[str, Any] = {"master_seed": self.master_seed}
        if self.target_count is not None:
            params["target_count"] = self.target_count
        if self.method is AugmentationMethod.Jitter:
            params["sigma"] = self.jitter.sigma
        elif self.method is AugmentationMethod.Upsample:
            params.update(self.upsample.to_dict())
            params.pop("rng_seed")
        elif self.method is AugmentationMethod.MeshSurface:
            params["mesh_oversample"] = self.mesh_oversample
        return params

    def to_dict(self) -> Dict[str, Any]:
        """JSON-serializable echo of the configuration."""
        return {
            "method": self.method.value,
            "samples": self.samples_m,
            "feature_mode": self.feature_mode.value,
            "agg_mode": self.agg_mode.value,
            "neighbor_k": self.neighbor_k,
            "logit_weight": self.logit_weight,
            "use_probabilities": self.use_probabilities,
            "params": self.method_params(),
        }
