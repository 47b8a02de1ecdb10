from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict

import numpy as np
from numpy.typing import NDArray

from pypctta.common.cloud import PointCloud, require_points


class AugmentationMethod(Enum):
    """
    Enumeration of the available augmentation methods. The value is the name used
    on the command line and in provenance records.
    """

    Jitter = "jitter"
    MeshSurface = "mesh"
    Upsample = "upsample"
    IdentityCopy = "copy"

    @classmethod
    def get(cls, item: str | AugmentationMethod) -> AugmentationMethod:
        """Returns the method for a member, a member name or a command-line value."""
        if isinstance(item, cls):
            return item
        for member in cls:
            if item in (member.name, member.value):
                return member
        raise ValueError(
            f"{item} is not a valid augmentation method. "
            f"Select from {[member.value for member in cls]}."
        )


def _check_int(name: str, value: Any, minimum: int) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"Expected type 'int' for '{name}', but got {type(value)}")
    if value < minimum:
        raise ValueError(f"'{name}' must be >= {minimum}, but got {value}.")


def _check_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value)):
        raise TypeError(f"Expected a finite number for '{name}', but got {value!r}.")
    if not value > 0:
        raise ValueError(f"'{name}' must be positive, but got {value}.")


@dataclass(frozen=True)
class JitterParams:
    """
    Parameters of the Gaussian jitter augmentation ``x_k = x_0 + sigma * z``.
    """

    sigma: float = 0.05
    """Standard deviation of the per-coordinate noise, in normalized-cloud units."""
    rng_seed: int = 0
    """Seed of the noise generator."""

    def __post_init__(self) -> None:
        if not (isinstance(self.sigma, (int, float)) and math.isfinite(self.sigma)):
            raise TypeError(
                f"Expected a finite number for 'sigma', but got {self.sigma!r}."
            )
        if self.sigma < 0:
            raise ValueError(f"'sigma' must be non-negative, but got {self.sigma}.")
        _check_int("rng_seed", self.rng_seed, minimum=-(2**63))

    def with_seed(self, rng_seed: int) -> JitterParams:
        return replace(self, rng_seed=rng_seed)

    def to_dict(self) -> Dict[str, Any]:
        return {"sigma": self.sigma, "rng_seed": self.rng_seed}


@dataclass(frozen=True)
class UpsampleParams:
    """
    Parameters of the upsampling augmentation: seed sampling on a voxel grid,
    projection onto locally fitted planes, outlier removal and farthest point
    resampling.

    `voxel_edge` and `seed_band` may be left None; `resolve` then derives them from
    the cloud (see `resolve`).
    """

    scale_r: float = 4.0
    """Upsampling ratio r; the upsampled cloud has floor(r * n) points."""
    voxel_edge: float | None = None
    """Edge length of the seed voxel grid."""
    seed_band: float | None = None
    """Maximum estimated distance between a voxel center and the surface."""
    k_triangle: int = 3
    """Number of nearest points spanning the triangle fan of the surface estimate."""
    k_plane: int = 4
    """Number of nearest points of the local plane fit."""
    k_bias: int = 8
    """Number of nearest projections used for the bias of a projection."""
    outlier_factor: float = 1.5
    """Projections with a bias above `outlier_factor` times the mean bias are removed."""
    include_original: bool = True
    """Whether the dense cloud includes the input points."""
    remove_outliers: bool = True
    """Whether the outlier removal stage runs."""
    rng_seed: int = 0
    """Seed of the farthest point start index."""

    def __post_init__(self) -> None:
        if not (
            isinstance(self.scale_r, (int, float)) and math.isfinite(self.scale_r)
        ):
            raise TypeError(
                f"Expected a finite number for 'scale_r', but got {self.scale_r!r}."
            )
        if self.scale_r < 1:
            raise ValueError(f"'scale_r' must be >= 1, but got {self.scale_r}.")
        if self.voxel_edge is not None:
            _check_positive("voxel_edge", self.voxel_edge)
        if self.seed_band is not None:
            if not (
                isinstance(self.seed_band, (int, float))
                and math.isfinite(self.seed_band)
            ):
                raise TypeError(
                    f"Expected a finite number for 'seed_band', but got {self.seed_band!r}."
                )
            if self.seed_band < 0:
                raise ValueError(
                    f"'seed_band' must be non-negative, but got {self.seed_band}."
                )
        _check_int("k_triangle", self.k_triangle, minimum=3)
        _check_int("k_plane", self.k_plane, minimum=3)
        _check_int("k_bias", self.k_bias, minimum=1)
        _check_positive("outlier_factor", self.outlier_factor)
        _check_int("rng_seed", self.rng_seed, minimum=-(2**63))

    @property
    def min_points(self) -> int:
        """The minimum number of input points of the upsampling pipeline."""
        return max(self.k_triangle, self.k_plane)

    def target_count(self, n_points: int) -> int:
        """The default output size floor(scale_r * n)."""
        return int(math.floor(self.scale_r * n_points))

    def resolve(self, cloud: PointCloud) -> UpsampleParams:
        """
        Returns a copy with `voxel_edge` and `seed_band` filled in for `cloud`.

        The default voxel edge is ``diagonal * sqrt(2 / (scale_r * n))`` with
        `diagonal` the length of the bounding-box diagonal. The cells within one edge
        of a closed surface then number a few times r * n, so the dense cloud can be
        resampled to r * n points. The default seed band equals the voxel edge.

        Raises
        ------
        EmptyCloud
            If the cloud has no points.
        """
        require_points(cloud)
        edge = self.voxel_edge
        if edge is None:
            lower, upper = cloud.bounds()
            diagonal = float(np.linalg.norm(upper - lower))
            edge = diagonal * math.sqrt(2.0 / (self.scale_r * cloud.n_points))
            if not edge > 0:
                # coincident points: any positive edge gives a single voxel
                edge = 1.0
        band = self.seed_band if self.seed_band is not None else edge
        return replace(self, voxel_edge=edge, seed_band=band)

    def with_seed(self, rng_seed: int) -> UpsampleParams:
        return replace(self, rng_seed=rng_seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale_r": self.scale_r,
            "voxel_edge": self.voxel_edge,
            "seed_band": self.seed_band,
            "k_triangle": self.k_triangle,
            "k_plane": self.k_plane,
            "k_bias": self.k_bias,
            "outlier_factor": self.outlier_factor,
            "include_original": self.include_original,
            "remove_outliers": self.remove_outliers,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True, eq=False)
class SeedProjection:
    """
    A seed point moved onto the estimated surface: ``projected = seed + distance *
    direction``.
    """

    seed: NDArray[np.float64]
    """The voxel center c."""
    projected: NDArray[np.float64]
    """The projected point c_p."""
    direction: NDArray[np.float64]
    """Unit projection direction n, the local plane normal oriented toward c."""
    distance: float
    """Signed projection distance d, non-positive."""
    bias: float = 0.0
    """Mean distance to the nearest other projections, set by outlier removal."""

    def __post_init__(self) -> None:
        for name in ("seed", "projected", "direction"):
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != (3,):
                raise ValueError(
                    f"Expected a 3-vector for '{name}', got {value.shape}."
                )
            object.__setattr__(self, name, value)
        expected = self.seed + self.distance * self.direction
        if not np.allclose(self.projected, expected, rtol=0.0, atol=1e-6):
            raise ValueError("'projected' must equal seed + distance * direction.")
        if self.bias < 0:
            raise ValueError(f"'bias' must be non-negative, but got {self.bias}.")

    def with_bias(self, bias: float) -> SeedProjection:
        return replace(self, bias=float(bias))
