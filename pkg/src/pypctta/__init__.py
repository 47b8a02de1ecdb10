from pypctta._version import __version__
from pypctta.aggregation import TtaConfig, classify_tta, segment_tta
from pypctta.augmentation import AugmentationMethod, make_augmentations
from pypctta.common import PointCloud, TriangleMesh
from pypctta.io import read_manifest, read_mesh, read_point_cloud
from pypctta.predictor import load_model
from pypctta.results.evaluation import evaluate_dataset

__all__ = [
    "__version__",
    "AugmentationMethod",
    "PointCloud",
    "TriangleMesh",
    "TtaConfig",
    "classify_tta",
    "evaluate_dataset",
    "load_model",
    "make_augmentations",
    "read_manifest",
    "read_mesh",
    "read_point_cloud",
    "segment_tta",
]
