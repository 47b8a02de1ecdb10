from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from pypctta.common.cloud import PointCloud
from pypctta.predictor.mlp import MlpPredictor
from pypctta.synth import sample_shape

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def sphere_cloud() -> PointCloud:
    """512 noise-free points on the unit sphere."""
    cloud, _ = sample_shape("sphere", 512, seed=3)
    return cloud


@pytest.fixture
def random_cloud() -> PointCloud:
    rng = np.random.default_rng(42)
    return PointCloud(rng.uniform(-1.0, 1.0, size=(128, 3)))


@pytest.fixture
def small_model() -> MlpPredictor:
    """A seeded random MLP with 4 classes and a segmentation head."""
    return MlpPredictor.random(
        seed=11, n_classes=4, point_dims=(16, 32, 64), seg_hidden=(32,)
    )
