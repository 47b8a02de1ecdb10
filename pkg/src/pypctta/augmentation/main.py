from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any, Dict, List, Sequence

from pypctta.augmentation.jitter import jitter
from pypctta.augmentation.params import AugmentationMethod
from pypctta.augmentation.surface import sample_mesh_vertices
from pypctta.augmentation.upsampling import densify
from pypctta.common.cloud import (
    PointCloud,
    TriangleMesh,
    normalize_unit_sphere,
    require_points,
)
from pypctta.common.sampling import farthest_point_sample
from pypctta.exceptions import EmptyCloud, InsufficientDensity
from pypctta.utils import derive_seed, make_rng, map_ordered

if TYPE_CHECKING:
    from pypctta.aggregation.config import TtaConfig


class AugmentationSet:
    """
    The original cloud x_0 together with its M augmented clouds x_1..x_M.

    *Not meant to be instantiated by the user.* Use `make_augmentations`.
    """

    def __init__(
        self,
        original: PointCloud,
        augmented: Sequence[PointCloud],
        method: AugmentationMethod,
        seeds: Sequence[int],
        params: Dict[str, Any] | None = None,
    ):
        """
        Parameters
        ----------
        original:
            The input cloud x_0.
        augmented:
            The M augmented clouds, ordered by sample index.
        method:
            The augmentation method that produced the clouds.
        seeds:
            The per-cloud seeds, one per augmented cloud.
        params:
            Optional echo of the method parameters, for provenance records.

        Raises
        ------
        ValueError
            If the seed count differs from the cloud count or seeds repeat.
        EmptyCloud
            If any cloud has no points.
        """
        require_points(original)
        if len(seeds) != len(augmented):
            raise ValueError(
                f"Expected one seed per augmented cloud, got {len(seeds)} seeds "
                f"for {len(augmented)} clouds."
            )
        if len(set(seeds)) != len(seeds):
            raise ValueError("Per-cloud seeds must be pairwise distinct.")
        for k, cloud in enumerate(augmented):
            if cloud.n_points == 0:
                raise EmptyCloud(f"Augmented cloud {k + 1} contains no points.")

        self._original = original
        self._augmented = list(augmented)
        self._method = method
        self._seeds = [int(seed) for seed in seeds]
        self._params = dict(params or {})

    @property
    def original(self) -> PointCloud:
        return self._original

    @property
    def augmented(self) -> List[PointCloud]:
        return self._augmented

    @property
    def method(self) -> AugmentationMethod:
        return self._method

    @property
    def seeds(self) -> List[int]:
        return self._seeds

    @property
    def params(self) -> Dict[str, Any]:
        return self._params

    @property
    def samples_m(self) -> int:
        """The number of augmented clouds M."""
        return len(self._augmented)

    @property
    def clouds(self) -> List[PointCloud]:
        """All clouds x_0..x_M."""
        return [self._original] + self._augmented

    def __len__(self) -> int:
        return self.samples_m

    def __repr__(self) -> str:
        return (
            f"AugmentationSet(method={self._method.value}, samples_m={self.samples_m})"
        )

    def provenance(self) -> Dict[str, Any]:
        """Returns a JSON-serializable record of method, seeds and parameters."""
        return {
            "method": self._method.value,
            "samples": self.samples_m,
            "n_points": self._original.n_points,
            "seeds": list(self._seeds),
            "params": self._params,
        }


def _distinct_starts(seeds: Sequence[int], size: int) -> List[int]:
    starts: List[int] = []
    for seed in seeds:
        start = int(make_rng(seed).integers(size))
        while start in starts and len(starts) < size:
            start = (start + 1) % size
        starts.append(start)
    return starts


def make_augmentations(
    cloud: PointCloud,
    config: TtaConfig,
    mesh: TriangleMesh | None = None,
    threads: int | None = None,
    verbose: bool = False,
) -> AugmentationSet:
    """
    Generates the M augmented clouds of a TTA configuration.

    The k-th cloud (k = 0..M-1) uses the seed ``derive_seed(config.master_seed, k)``.
    Jitter, mesh and upsample augmentations run in the unit-sphere frame of the
    input and are mapped back to the input frame. Mesh and upsample clouds are
    resampled by farthest point sampling to `config.target_count` points (the input
    point count by default); jitter preserves the count and the identity method
    returns exact copies.

    Parameters
    ----------
    cloud:
        The non-empty input cloud x_0.
    config:
        The TTA configuration (method, M, seed and method parameters).
    mesh:
        The mesh of the input, required by the mesh-surface method.
    threads:
        Worker count; None reads ``PCTTA_THREADS``. The result does not depend on
        it.
    verbose:
        If True, log the generation stages.

    Returns
    -------
    AugmentationSet

    Raises
    ------
    EmptyCloud
        If the input cloud has no points.
    ValueError
        If the mesh-surface method is selected without a mesh.
    InsufficientDensity
        If the upsampled dense cloud has fewer points than the target.
    """
    require_points(cloud)
    method = config.method
    count = config.samples_m
    seeds = [derive_seed(config.master_seed, k) for k in range(count)]
    target = config.target_count if config.target_count is not None else cloud.n_points
    params = config.method_params()

    if verbose:
        logging.info(
            f"Generating {count} augmented clouds with method '{method.value}'."
        )

    if count == 0:
        return AugmentationSet(cloud, [], method, [], params=params)

    if method is AugmentationMethod.IdentityCopy:
        copies = [PointCloud(cloud.points, cloud.normals) for _ in range(count)]
        return AugmentationSet(cloud, copies, method, seeds, params=params)

    normalized, transform = normalize_unit_sphere(cloud)

    if method is AugmentationMethod.Jitter:

        def task(k: int) -> PointCloud:
            return transform.invert_cloud(
                jitter(normalized, config.jitter.with_seed(seeds[k]))
            )

    elif method is AugmentationMethod.MeshSurface:
        if mesh is None:
            raise ValueError("The mesh-surface augmentation requires a mesh.")
        normalized_mesh = transform.apply_mesh(mesh)
        draws = config.mesh_oversample * target

        def task(k: int) -> PointCloud:
            sampled = sample_mesh_vertices(normalized_mesh, draws, seeds[k])
            start = int(make_rng(derive_seed(seeds[k], 1)).integers(sampled.n_points))
            selected = sampled.select(farthest_point_sample(sampled, target, start))
            return transform.invert_cloud(selected)

    elif method is AugmentationMethod.Upsample:
        dense = densify(normalized, config.upsample, verbose=verbose)
        if dense.n_points < target:
            raise InsufficientDensity(
                f"The dense cloud has {dense.n_points} points but {target} are "
                "requested; increase seed_band or decrease voxel_edge."
            )
        starts = _distinct_starts(seeds, dense.n_points)

        def task(k: int) -> PointCloud:
            selected = dense.select(farthest_point_sample(dense, target, starts[k]))
            return transform.invert_cloud(selected)

    else:
        raise ValueError(f"Unsupported augmentation method {method}.")

    augmented = map_ordered(task, range(count), threads)
    return AugmentationSet(cloud, augmented, method, seeds, params=params)
