from __future__ import annotations

from pypctta.augmentation.params import JitterParams
from pypctta.common.cloud import PointCloud, require_points
from pypctta.utils import make_rng


def jitter(cloud: PointCloud, params: JitterParams) -> PointCloud:
    """
    Adds iid Gaussian noise to every coordinate: ``x_k = x_0 + sigma * z``.

    Parameters
    ----------
    cloud:
        The non-empty input cloud.
    params:
        The noise level and seed. Equal seeds give bit-identical outputs; a sigma of
        zero returns the input coordinates unchanged.

    Returns
    -------
    PointCloud
        The jittered cloud with the same point count; normals are copied.

    Raises
    ------
    EmptyCloud
        If the cloud has no points.
    """
    require_points(cloud)
    if params.sigma == 0:
        return PointCloud(cloud.points, cloud.normals)
    noise = make_rng(params.rng_seed).standard_normal(size=cloud.points.shape)
    return PointCloud(cloud.points + params.sigma * noise, cloud.normals)
