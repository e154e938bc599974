"""Self-contained bitstream container for one encoded point cloud.

Layout (all integers little-endian, floats IEEE-754 binary64):

    offset  size  field
    0        6    magic "CYLPC1"
    6        1    version (1)
    7        1    coordinate system: 0 Cartesian, 1 cylindrical
    8        1    octree depth (1..21)
    9        1    flags: bit 0 = log-radial partition
    10       8    r_min (meters; meaningful when log-radial)
    18      48    bounds, 6 doubles:
                    Cartesian:   origin_x, origin_y, origin_z, side, 0, 0
                    cylindrical: radius, height, h_min, 0, 0, 0
    66       8    original point count N
    74       8    quantization step
    82       8    geometry section length G
    90       G    octree occupancy bytes
    90+G     8    attribute section length A
    98+G     8    coefficient count (equals the occupied leaf count)
    106+G    A    RLGR payload bytes

The decoder needs nothing beyond these bytes. Leaf weights are not
transmitted: the wire pipeline runs the hierarchical transform with unit
weight per occupied voxel, which the decoder reproduces from the
occupancy stream alone.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptStreamError, CylpcError
from .geometry import BoundingCylinder, PointCloud
from .octree import deserialize, octree_from_leaf_codes, serialize
from .coeff_codec import RlgrPayload, quantize, rlgr_decode, rlgr_encode
from .raht import CoefficientStream, raht_forward_arrays, raht_inverse_arrays
from .voxelizer import (
    CoordinateSystem,
    VoxelGridConfig,
    VoxelizedCloud,
    config_from_cylinder,
    make_config,
    voxel_centers,
    voxelize,
)

MAGIC = b"CYLPC1"
VERSION = 1

_HEADER = struct.Struct("<6sBBBB7dQd")
HEADER_BYTES = _HEADER.size  # 82
# container overhead: fixed header + two section lengths + coefficient count
OVERHEAD_BYTES = HEADER_BYTES + 8 + 8 + 8


@dataclass(frozen=True)
class EncodeSummary:
    """Per-stream rate accounting. Section bpp figures count payload bytes
    only; header_bpp covers the fixed header and length/count fields so
    the three sections sum exactly to the file size."""

    n_points: int
    n_voxels: int
    geometry_bytes: int
    attribute_bytes: int
    total_bytes: int

    @property
    def header_bytes(self) -> int:
        return self.total_bytes - self.geometry_bytes - self.attribute_bytes

    @property
    def geometry_bpp(self) -> float:
        return 8.0 * self.geometry_bytes / self.n_points

    @property
    def attribute_bpp(self) -> float:
        return 8.0 * self.attribute_bytes / self.n_points

    @property
    def header_bpp(self) -> float:
        return 8.0 * self.header_bytes / self.n_points

    @property
    def total_bpp(self) -> float:
        return 8.0 * self.total_bytes / self.n_points


@dataclass(frozen=True)
class DecodedCloud:
    """Decoder output: voxel-center cloud plus the stream's parameters."""

    cloud: PointCloud
    config: VoxelGridConfig
    codes: np.ndarray
    leaf_attributes: np.ndarray
    qstep: float
    n_points: int


def attribute_ints(vc: VoxelizedCloud, qstep: float) -> list[int]:
    """Transform, quantize and order the attribute coefficients for coding."""
    coeffs = raht_forward_arrays(
        vc.codes, vc.attributes, np.ones(len(vc), dtype=np.int64), vc.config.depth
    )
    qs = quantize(coeffs, qstep)
    return [qs.dc_q] + qs.highs_q.tolist()


def decode_attributes(
    ints: list[int], codes: np.ndarray, depth: int, qstep: float
) -> np.ndarray:
    """Inverse of attribute_ints given the leaf codes; clamps to [0, 255]."""
    coeffs = CoefficientStream(dc=ints[0] * qstep, highs=np.asarray(ints[1:]) * qstep)
    attrs = raht_inverse_arrays(
        coeffs, codes, np.ones(codes.size, dtype=np.int64), depth
    )
    return np.clip(attrs, 0.0, 255.0)


def _bounds_fields(cfg: VoxelGridConfig) -> tuple[float, ...]:
    if cfg.system is CoordinateSystem.CARTESIAN:
        return (*cfg.origin, cfg.extents[0], 0.0, 0.0)
    return (cfg.radius, cfg.extents[2], cfg.origin[2], 0.0, 0.0, 0.0)


def _config_from_header(
    coords: int, depth: int, log_radial: bool, r_min: float, bounds: tuple[float, ...]
) -> VoxelGridConfig:
    try:
        if coords == 0:
            return VoxelGridConfig(
                system=CoordinateSystem.CARTESIAN,
                depth=depth,
                origin=bounds[:3],
                extents=(bounds[3],) * 3,
            )
        cylinder = BoundingCylinder(radius=bounds[0], height=bounds[1], h_min=bounds[2])
        return config_from_cylinder(cylinder, depth, log_radial, r_min)
    except CylpcError as exc:
        raise CorruptStreamError(f"invalid bounds in header: {exc}") from exc


def pack_stream(cfg: VoxelGridConfig, n_points: int, qstep: float,
                occupancy: bytes, payload: RlgrPayload) -> bytes:
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        0 if cfg.system is CoordinateSystem.CARTESIAN else 1,
        cfg.depth,
        1 if cfg.log_radial else 0,
        cfg.r_min,
        *_bounds_fields(cfg),
        n_points,
        qstep,
    )
    return b"".join(
        [
            header,
            struct.pack("<Q", len(occupancy)),
            occupancy,
            struct.pack("<QQ", len(payload.data), payload.count),
            payload.data,
        ]
    )


def encode_cloud(
    pc: PointCloud,
    system: CoordinateSystem,
    depth: int,
    qstep: float,
    log_radial: bool = False,
    r_min: float = 1.0,
) -> tuple[bytes, EncodeSummary]:
    """Run the full pipeline on ``pc`` and return (bitstream, summary)."""
    cfg = make_config(pc, system, depth, log_radial=log_radial, r_min=r_min)
    vc = voxelize(pc, cfg)
    occupancy = serialize(octree_from_leaf_codes(vc.codes, cfg.depth)).data
    payload = rlgr_encode(attribute_ints(vc, qstep))
    data = pack_stream(cfg, len(pc), qstep, occupancy, payload)
    summary = EncodeSummary(
        n_points=len(pc),
        n_voxels=len(vc),
        geometry_bytes=len(occupancy),
        attribute_bytes=len(payload.data),
        total_bytes=len(data),
    )
    return data, summary


def decode_cloud(data: bytes) -> DecodedCloud:
    """Decode a bitstream produced by encode_cloud; needs only the bytes."""
    if len(data) < HEADER_BYTES:
        raise CorruptStreamError(
            f"stream of {len(data)} bytes is shorter than the {HEADER_BYTES}-byte header",
            offset=len(data),
        )
    (magic, version, coords, depth, flags, r_min, b0, b1, b2, b3, b4, b5,
     n_points, qstep) = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptStreamError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise CorruptStreamError(f"unsupported version {version}", offset=6)
    if coords not in (0, 1):
        raise CorruptStreamError(f"unknown coordinate system {coords}", offset=7)
    if not 1 <= depth <= 21:
        raise CorruptStreamError(f"depth {depth} outside [1, 21]", offset=8)
    if flags & ~1:
        raise CorruptStreamError(f"unknown flags 0x{flags:02x}", offset=9)
    if n_points < 1:
        raise CorruptStreamError(f"point count {n_points} must be >= 1", offset=66)
    if not (qstep > 0.0 and np.isfinite(qstep)):
        raise CorruptStreamError(f"invalid qstep {qstep}", offset=74)
    cfg = _config_from_header(
        coords, depth, bool(flags & 1), r_min, (b0, b1, b2, b3, b4, b5)
    )

    pos = HEADER_BYTES
    if len(data) < pos + 8:
        raise CorruptStreamError("truncated geometry section length", offset=len(data))
    (geom_len,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if len(data) < pos + geom_len:
        raise CorruptStreamError(
            f"geometry section of {geom_len} bytes exceeds stream", offset=len(data)
        )
    try:
        octree = deserialize(data[pos : pos + geom_len], depth)
    except CorruptStreamError as exc:
        raise CorruptStreamError(
            f"geometry section: {exc}",
            offset=pos + (exc.offset if exc.offset is not None else 0),
        ) from exc
    pos += geom_len

    if len(data) < pos + 16:
        raise CorruptStreamError("truncated attribute section header", offset=len(data))
    attr_len, count = struct.unpack_from("<QQ", data, pos)
    pos += 16
    if len(data) < pos + attr_len:
        raise CorruptStreamError(
            f"attribute section of {attr_len} bytes exceeds stream", offset=len(data)
        )
    if len(data) != pos + attr_len:
        raise CorruptStreamError(
            f"{len(data) - pos - attr_len} trailing bytes after attribute section",
            offset=pos + attr_len,
        )
    codes = octree.leaves
    if count != codes.size:
        raise CorruptStreamError(
            f"coefficient count {count} does not match {codes.size} occupied leaves",
            offset=pos - 8,
        )
    payload = RlgrPayload(data=data[pos : pos + attr_len], count=int(count))
    try:
        ints = rlgr_decode(payload)
    except CorruptStreamError as exc:
        raise CorruptStreamError(
            f"attribute section: {exc}", offset=exc.offset
        ) from exc
    attrs = decode_attributes(ints, codes, depth, qstep)
    return DecodedCloud(
        cloud=PointCloud(voxel_centers(cfg, codes), attrs),
        config=cfg,
        codes=codes,
        leaf_attributes=attrs,
        qstep=qstep,
        n_points=int(n_points),
    )
