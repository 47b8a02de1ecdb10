from pypctta.augmentation.jitter import jitter
from pypctta.augmentation.main import AugmentationSet, make_augmentations
from pypctta.augmentation.params import (
    AugmentationMethod,
    JitterParams,
    SeedProjection,
    UpsampleParams,
)
from pypctta.augmentation.surface import sample_mesh_vertices, vertex_normals
from pypctta.augmentation.upsampling import (
    densify,
    project_seeds,
    remove_outliers,
    sample_seeds,
    upsample,
)

__all__ = [
    "AugmentationMethod",
    "AugmentationSet",
    "JitterParams",
    "SeedProjection",
    "UpsampleParams",
    "densify",
    "jitter",
    "make_augmentations",
    "project_seeds",
    "remove_outliers",
    "sample_mesh_vertices",
    "sample_seeds",
    "upsample",
    "vertex_normals",
]
