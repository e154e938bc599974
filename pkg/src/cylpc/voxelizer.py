"""Voxel grids in Cartesian or cylindrical coordinates.

A grid partitions each axis into 2**depth half-open bins of equal width
in the axis domain. For the cylindrical system the axis domains are
(r, theta, h) with theta spanning exactly [-pi, pi); the radial axis may
optionally be partitioned uniformly in ln(r) between ln(r_min) and
ln(R), which makes radial shells grow geometrically with distance from
the sensor. Points with r < r_min (including r = 0) clamp into the
first radial bin.

Points on a bin boundary go to the upper bin (floor semantics).
Duplicate points are kept and add to the voxel's point count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidConfigError, InvalidInputError, OutOfRangeError
from .geometry import (
    BoundingCylinder,
    PointCloud,
    bounding_box,
    bounding_cylinder,
    cartesian_to_cylindrical,
    cylindrical_to_cartesian,
)
from .morton import MAX_DEPTH, morton_decode, morton_encode


class CoordinateSystem(enum.Enum):
    CARTESIAN = "cartesian"
    CYLINDRICAL = "cylindrical"


@dataclass(frozen=True)
class VoxelGridConfig:
    """Geometry of one voxel partition.

    ``origin`` and ``extents`` describe the three axis intervals in the
    (possibly log-transformed) axis domain:

      Cartesian:    origin = box minima,              extents = (W, W, W)
      cylindrical:  origin = (0, -pi, h_min),         extents = (R, 2*pi, H)
      cyl. + log:   origin = (ln r_min, -pi, h_min),  extents = (ln(R/r_min), 2*pi, H)

    The per-axis quantization step is extents[a] / 2**depth.
    """

    system: CoordinateSystem
    depth: int
    origin: tuple[float, float, float]
    extents: tuple[float, float, float]
    log_radial: bool = False
    r_min: float = 1.0

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_DEPTH:
            raise InvalidConfigError(f"depth {self.depth} outside [1, {MAX_DEPTH}]")
        if any(not (e > 0.0) for e in self.extents):
            raise InvalidConfigError(f"axis extents must be positive, got {self.extents}")
        if self.log_radial:
            if self.system is not CoordinateSystem.CYLINDRICAL:
                raise InvalidConfigError("log_radial requires the cylindrical system")
            if not self.r_min > 0.0:
                raise InvalidConfigError(f"log_radial requires r_min > 0, got {self.r_min}")

    @property
    def steps(self) -> tuple[float, float, float]:
        n = 1 << self.depth
        return (self.extents[0] / n, self.extents[1] / n, self.extents[2] / n)

    @property
    def radius(self) -> float:
        """Outer cylinder radius R (meters), undoing the log transform."""
        if self.system is not CoordinateSystem.CYLINDRICAL:
            raise InvalidConfigError("radius is only defined for cylindrical grids")
        if self.log_radial:
            return math.exp(self.origin[0] + self.extents[0])
        return self.extents[0]


@dataclass(frozen=True)
class VoxelizedCloud:
    """Occupied voxels: sorted interleaved codes, mean attributes, point counts."""

    config: VoxelGridConfig
    codes: np.ndarray
    attributes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        attrs = np.ascontiguousarray(self.attributes, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.int64)
        if not (codes.shape == attrs.shape == weights.shape) or codes.ndim != 1:
            raise InvalidInputError("codes, attributes and weights must be 1-D and aligned")
        if codes.size == 0:
            raise InvalidInputError("voxelized cloud must contain at least one voxel")
        if (np.diff(codes) <= 0).any():
            raise InvalidInputError("voxel codes must be strictly increasing")
        if weights.min() < 1:
            raise InvalidInputError("voxel weights must be positive point counts")
        for name, arr in (("codes", codes), ("attributes", attrs), ("weights", weights)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.codes.shape[0]

    @property
    def n_points(self) -> int:
        return int(self.weights.sum())

    @property
    def indices(self) -> np.ndarray:
        """(N, 3) per-axis bin indices of the occupied voxels."""
        return morton_decode(self.codes, self.config.depth)


@dataclass(frozen=True)
class ErrorModel:
    """Per-axis variances of the zero-mean voxelization error variables."""

    sigma1_sq: float
    sigma2_sq: float
    sigma3_sq: float

    def __post_init__(self):
        if min(self.sigma1_sq, self.sigma2_sq, self.sigma3_sq) < 0.0:
            raise InvalidInputError("variances must be non-negative")


def make_config(
    pc: PointCloud,
    system: CoordinateSystem,
    depth: int,
    log_radial: bool = False,
    r_min: float = 1.0,
) -> VoxelGridConfig:
    """Build a grid config whose bounds tightly (plus padding) enclose ``pc``."""
    if system is CoordinateSystem.CARTESIAN:
        if log_radial:
            raise InvalidConfigError("log_radial is only meaningful for cylindrical grids")
        bb = bounding_box(pc)
        return VoxelGridConfig(
            system=system,
            depth=depth,
            origin=bb.origin,
            extents=(bb.side, bb.side, bb.side),
        )
    bc = bounding_cylinder(pc)
    return config_from_cylinder(bc, depth, log_radial, r_min)


def config_from_cylinder(
    bc: BoundingCylinder, depth: int, log_radial: bool = False, r_min: float = 1.0
) -> VoxelGridConfig:
    """Cylindrical grid config from explicit bounds (also used by the decoder)."""
    if log_radial:
        if r_min <= 0.0:
            raise InvalidConfigError(f"r_min must be positive, got {r_min}")
        if r_min >= bc.radius:
            raise InvalidConfigError(
                f"r_min {r_min} must be smaller than the cylinder radius {bc.radius}"
            )
        radial_origin = math.log(r_min)
        radial_extent = math.log(bc.radius) - radial_origin
    else:
        radial_origin = 0.0
        radial_extent = bc.radius
    return VoxelGridConfig(
        system=CoordinateSystem.CYLINDRICAL,
        depth=depth,
        origin=(radial_origin, -math.pi, bc.h_min),
        extents=(radial_extent, 2.0 * math.pi, bc.height),
        log_radial=log_radial,
        r_min=r_min,
    )


def _axis_coordinates(pc: PointCloud, cfg: VoxelGridConfig) -> np.ndarray:
    """Per-point coordinates in the grid's (possibly transformed) axis domain."""
    if cfg.system is CoordinateSystem.CARTESIAN:
        return pc.xyz
    rth = cartesian_to_cylindrical(pc.xyz)
    if cfg.log_radial:
        rth = rth.copy()
        rth[:, 0] = np.log(np.maximum(rth[:, 0], cfg.r_min))
    return rth


def assign_codes(pc: PointCloud, cfg: VoxelGridConfig) -> np.ndarray:
    """Interleaved voxel code of every point of ``pc`` under ``cfg``."""
    if len(pc) == 0:
        raise InvalidInputError("cannot voxelize an empty point cloud")
    coords = _axis_coordinates(pc, cfg)
    steps = np.asarray(cfg.steps)
    idx = np.floor((coords - np.asarray(cfg.origin)) / steps).astype(np.int64)
    bad = (idx < 0) | (idx >= (1 << cfg.depth))
    if bad.any():
        first = int(np.flatnonzero(bad.any(axis=1))[0])
        raise OutOfRangeError(
            f"point {first} at {tuple(pc.xyz[first])} falls outside the voxel grid"
        )
    return morton_encode(idx, cfg.depth)


def voxelize(pc: PointCloud, cfg: VoxelGridConfig) -> VoxelizedCloud:
    """Bin every point of ``pc`` and average attributes per occupied voxel."""
    codes = assign_codes(pc, cfg)
    unique, inverse = np.unique(codes, return_inverse=True)
    weights = np.bincount(inverse, minlength=unique.size)
    sums = np.bincount(inverse, weights=pc.attributes, minlength=unique.size)
    return VoxelizedCloud(
        config=cfg,
        codes=unique,
        attributes=sums / weights,
        weights=weights,
    )


def voxel_centers(cfg: VoxelGridConfig, codes: np.ndarray) -> np.ndarray:
    """Cartesian (N, 3) centers of the voxels addressed by ``codes``.

    Centers are the midpoints of each axis bin in the axis domain; for a
    log-radial grid the radial midpoint is taken in the log domain and
    exponentiated, i.e. the geometric center of the shell.
    """
    ijk = morton_decode(np.asarray(codes, dtype=np.int64), cfg.depth)
    centers = np.asarray(cfg.origin) + (ijk + 0.5) * np.asarray(cfg.steps)
    if cfg.system is CoordinateSystem.CARTESIAN:
        return centers
    if cfg.log_radial:
        centers[:, 0] = np.exp(centers[:, 0])
    return cylindrical_to_cartesian(centers)


def devoxelize(vc: VoxelizedCloud) -> PointCloud:
    """One point per occupied voxel, at the voxel center, with the voxel mean."""
    return PointCloud(voxel_centers(vc.config, vc.codes), vc.attributes)


def voxelization_error_cartesian(p, p_hat) -> float:
    """Squared Euclidean distance between a point and its reconstruction."""
    a = np.asarray(p, dtype=np.float64)
    b = np.asarray(p_hat, dtype=np.float64)
    d = a - b
    return float(np.dot(d, d))


def voxelization_error_cylindrical(r, e1, e2, e3):
    """Exact squared Cartesian error caused by cylindrical-domain offsets.

    For a point at radius r displaced by (e1, e2, e3) along (r, theta, h)
    the squared distance between original and displaced point is
    e1^2 + 2 r (r + e1) (1 - cos e2) + e3^2, identically in theta.
    1 - cos is evaluated as 2 sin^2(e2 / 2) to avoid cancellation.
    """
    r = np.asarray(r, dtype=np.float64)
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    e3 = np.asarray(e3, dtype=np.float64)
    s = np.sin(e2 / 2.0)
    out = e1 * e1 + 2.0 * r * (r + e1) * (2.0 * s * s) + e3 * e3
    if out.ndim == 0:
        return float(out)
    return out


def expected_error_cylindrical(r: float, model: ErrorModel) -> float:
    """Small-angle expectation sigma1^2 + r^2 sigma2^2 + sigma3^2."""
    return model.sigma1_sq + r * r * model.sigma2_sq + model.sigma3_sq


def expected_error_cartesian(model: ErrorModel) -> float:
    """Expected squared Cartesian error; equals 3 sigma^2 for equal variances."""
    return model.sigma1_sq + model.sigma2_sq + model.sigma3_sq


def knn_mean_distance(pc: PointCloud, k: int) -> np.ndarray:
    """(N, 2) rows of (radial distance, mean distance to the k nearest neighbors)."""
    n = len(pc)
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if n <= k:
        raise InvalidInputError(f"need more than k={k} points, got {n}")
    tree = cKDTree(pc.xyz)
    dists, _ = tree.query(pc.xyz, k=k + 1)  # first hit is the point itself
    mean_knn = dists[:, 1:].mean(axis=1)
    r = np.hypot(pc.xyz[:, 0], pc.xyz[:, 1])
    return np.column_stack((r, mean_knn))


def occupancy_stats(vc: VoxelizedCloud) -> tuple[int, float]:
    """(occupied voxel count, mean number of points per occupied voxel)."""
    count = len(vc)
    return count, vc.n_points / count
