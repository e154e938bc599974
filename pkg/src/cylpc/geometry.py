"""Point types, Cartesian/cylindrical conversion and bounding volumes.

Conventions:
  * theta is the full-quadrant angle of (y, x) canonicalized to the
    half-open interval [-pi, pi); a computed +pi wraps to -pi so that
    angular binning is unambiguous.
  * theta = 0 at the axis (x = y = 0), keeping the conversion total.
  * Bounding extents are padded by a relative 1e-9 so that maximal
    points land strictly inside a half-open partition of the volume.

All types are immutable values and all functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi

# Relative padding applied to bounding extents.
PAD_REL = 1e-9


@dataclass(frozen=True)
class CartesianPoint:
    """A point (x, y, z) in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise InvalidInputError(f"non-finite Cartesian point {(self.x, self.y, self.z)}")


@dataclass(frozen=True)
class CylindricalPoint:
    """A point (r, theta, h): radial distance, angle in [-pi, pi), height."""

    r: float
    theta: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.theta) and math.isfinite(self.h)):
            raise InvalidInputError(f"non-finite cylindrical point {(self.r, self.theta, self.h)}")
        if self.r < 0.0:
            raise InvalidInputError(f"negative radius {self.r}")
        if not (-math.pi <= self.theta < math.pi):
            raise InvalidInputError(f"theta {self.theta} outside [-pi, pi)")


@dataclass(frozen=True)
class PointCloud:
    """A LiDAR sweep: (N, 3) Cartesian coordinates plus one intensity per point.

    Intensities live on the 8-bit scale [0, 255] (loaders rescale at
    ingestion). Empty clouds are representable; operations that need at
    least one point raise InvalidInputError.
    """

    xyz: np.ndarray
    attributes: np.ndarray

    def __post_init__(self):
        xyz = np.ascontiguousarray(self.xyz, dtype=np.float64)
        attrs = np.ascontiguousarray(self.attributes, dtype=np.float64)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise InvalidInputError(f"xyz must have shape (N, 3), got {xyz.shape}")
        if attrs.shape != (xyz.shape[0],):
            raise InvalidInputError(
                f"attributes length {attrs.shape} does not match {xyz.shape[0]} points"
            )
        if not np.isfinite(xyz).all():
            raise InvalidInputError("non-finite coordinates in point cloud")
        if attrs.size and (attrs.min() < 0.0 or attrs.max() > 255.0 or not np.isfinite(attrs).all()):
            raise InvalidInputError("attributes must be finite values in [0, 255]")
        xyz.setflags(write=False)
        attrs.setflags(write=False)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "attributes", attrs)

    def __len__(self) -> int:
        return self.xyz.shape[0]


@dataclass(frozen=True)
class BoundingCylinder:
    """Axis-aligned cylinder r <= R, h_min <= h <= h_min + H enclosing a cloud."""

    radius: float
    height: float
    h_min: float

    def __post_init__(self):
        if not (self.radius > 0.0 and self.height > 0.0):
            raise InvalidInputError("bounding cylinder must have positive radius and height")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned cube [origin, origin + side)^3 enclosing a cloud."""

    origin: tuple[float, float, float]
    side: float

    def __post_init__(self):
        if not self.side > 0.0:
            raise InvalidInputError("bounding box must have positive side")


def wrap_angle(theta):
    """Map any angle (scalar or array) onto [-pi, pi)."""
    wrapped = np.mod(np.asarray(theta, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    # mod can return exactly 2*pi - eps -> fine; exactly pi only via input pi
    wrapped = np.where(wrapped >= np.pi, wrapped - TWO_PI, wrapped)
    if np.ndim(theta) == 0:
        return float(wrapped)
    return wrapped


def to_cylindrical(p: CartesianPoint) -> CylindricalPoint:
    """Convert one Cartesian point to cylindrical (r, theta, h)."""
    r = math.hypot(p.x, p.y)
    if r == 0.0:
        theta = 0.0
    else:
        theta = math.atan2(p.y, p.x)
        if theta >= math.pi:  # atan2 returns (-pi, pi]; canonicalize to [-pi, pi)
            theta = -math.pi
    return CylindricalPoint(r, theta, p.z)


def to_cartesian(p: CylindricalPoint) -> CartesianPoint:
    """Convert one cylindrical point back to Cartesian coordinates."""
    return CartesianPoint(p.r * math.cos(p.theta), p.r * math.sin(p.theta), p.h)


def cartesian_to_cylindrical(xyz: np.ndarray) -> np.ndarray:
    """Vectorized conversion: (N, 3) x/y/z -> (N, 3) r/theta/h."""
    xyz = np.asarray(xyz, dtype=np.float64)
    r = np.hypot(xyz[:, 0], xyz[:, 1])
    theta = np.arctan2(xyz[:, 1], xyz[:, 0])
    theta = np.where(theta >= np.pi, -np.pi, theta)
    theta = np.where(r == 0.0, 0.0, theta)
    return np.column_stack((r, theta, xyz[:, 2]))


def cylindrical_to_cartesian(rth: np.ndarray) -> np.ndarray:
    """Vectorized conversion: (N, 3) r/theta/h -> (N, 3) x/y/z."""
    rth = np.asarray(rth, dtype=np.float64)
    return np.column_stack(
        (rth[:, 0] * np.cos(rth[:, 1]), rth[:, 0] * np.sin(rth[:, 1]), rth[:, 2])
    )


def _padded_span(lo: float, hi: float) -> float:
    """Half-open span covering [lo, hi], padded so hi falls strictly inside."""
    span = hi - lo
    pad = PAD_REL * max(span, abs(lo), abs(hi), 1.0)
    return span + pad


def bounding_cylinder(pc: PointCloud) -> BoundingCylinder:
    """Tight padded cylinder around a cloud (R = max radius, H = height span)."""
    if len(pc) == 0:
        raise InvalidInputError("cannot bound an empty point cloud")
    r = np.hypot(pc.xyz[:, 0], pc.xyz[:, 1])
    h = pc.xyz[:, 2]
    h_min = float(h.min())
    return BoundingCylinder(
        radius=_padded_span(0.0, float(r.max())),
        height=_padded_span(h_min, float(h.max())),
        h_min=h_min,
    )


def bounding_box(pc: PointCloud) -> BoundingBox:
    """Tight padded cube around a cloud: per-axis minima, side = max extent."""
    if len(pc) == 0:
        raise InvalidInputError("cannot bound an empty point cloud")
    lo = pc.xyz.min(axis=0)
    hi = pc.xyz.max(axis=0)
    side = max(_padded_span(float(a), float(b)) for a, b in zip(lo, hi))
    return BoundingBox(origin=(float(lo[0]), float(lo[1]), float(lo[2])), side=side)
