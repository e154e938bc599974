"""Occupancy octree over voxel codes and its breadth-first byte serialization.

Every occupied internal node contributes exactly one occupancy byte; bit
4*d2 + 2*d1 + d0 is set iff the child offset (d0, d1, d2) along
(axis0, axis1, axis2) is occupied. Nodes are emitted level by level from
the root, each level sorted by interleaved code, so the stream is a pure
function of the occupied-voxel set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptStreamError, InvalidInputError
from .morton import MAX_DEPTH
from .voxelizer import VoxelizedCloud


@dataclass(frozen=True)
class Octree:
    """Per-level sorted occupied-node codes; level 0 is the root, level
    ``depth`` holds the leaves. ``leaf_attributes``/``leaf_weights`` are
    aligned with the leaf codes; a geometry-only tree (e.g. from
    deserialization) carries None for both.
    """

    depth: int
    levels: tuple[np.ndarray, ...]
    leaf_attributes: np.ndarray | None = None
    leaf_weights: np.ndarray | None = None

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_DEPTH:
            raise InvalidInputError(f"depth {self.depth} outside [1, {MAX_DEPTH}]")
        if len(self.levels) != self.depth + 1:
            raise InvalidInputError(
                f"expected {self.depth + 1} levels, got {len(self.levels)}"
            )
        if self.levels[0].shape != (1,) or self.levels[0][0] != 0:
            raise InvalidInputError("level 0 must be the single root node")
        for lvl, codes in enumerate(self.levels[1:], start=1):
            if codes.size == 0 or (np.diff(codes) <= 0).any():
                raise InvalidInputError(f"level {lvl} codes must be strictly increasing")
            parents = np.unique(codes >> 3)
            if parents.size != self.levels[lvl - 1].size or (
                parents != self.levels[lvl - 1]
            ).any():
                raise InvalidInputError(f"level {lvl} violates parent closure")

    @property
    def leaves(self) -> np.ndarray:
        return self.levels[self.depth]

    @property
    def n_leaves(self) -> int:
        return int(self.leaves.size)

    @property
    def n_internal_nodes(self) -> int:
        return int(sum(lvl.size for lvl in self.levels[: self.depth]))


@dataclass(frozen=True)
class OccupancyStream:
    """Serialized occupancy bytes, one per occupied internal node."""

    data: bytes

    def __len__(self) -> int:
        return len(self.data)


def octree_from_leaf_codes(
    codes: np.ndarray,
    depth: int,
    leaf_attributes: np.ndarray | None = None,
    leaf_weights: np.ndarray | None = None,
) -> Octree:
    """Build the tree whose leaf set is ``codes`` via successive right-shifts."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if codes.size == 0:
        raise InvalidInputError("octree needs at least one occupied voxel")
    if codes.min() < 0 or codes.max() >= (1 << (3 * depth)):
        raise InvalidInputError(f"leaf codes outside [0, 8^{depth})")
    if (np.diff(codes) <= 0).any():
        raise InvalidInputError("leaf codes must be strictly increasing")
    levels = [codes]
    for _ in range(depth):
        levels.append(np.unique(levels[-1] >> 3))
    levels.reverse()
    return Octree(
        depth=depth,
        levels=tuple(levels),
        leaf_attributes=leaf_attributes,
        leaf_weights=leaf_weights,
    )


def build_octree(vc: VoxelizedCloud) -> Octree:
    """Octree over the occupied voxels of ``vc``, leaves carrying its payload."""
    return octree_from_leaf_codes(
        vc.codes, vc.config.depth, leaf_attributes=vc.attributes, leaf_weights=vc.weights
    )


def serialize(ot: Octree) -> OccupancyStream:
    """Breadth-first occupancy bytes for every occupied internal node."""
    out = bytearray()
    for level in range(ot.depth):
        children = ot.levels[level + 1]
        parent_of_child = children >> 3
        child_bit = (children & 7).astype(np.uint8)
        starts = np.flatnonzero(
            np.r_[True, parent_of_child[1:] != parent_of_child[:-1]]
        )
        occupancy = np.bitwise_or.reduceat(
            np.left_shift(np.uint8(1), child_bit), starts
        )
        out += occupancy.astype(np.uint8).tobytes()
    return OccupancyStream(bytes(out))


def deserialize(stream: OccupancyStream | bytes, depth: int) -> Octree:
    """Rebuild the occupied-node hierarchy from an occupancy byte stream.

    Geometry only: the returned tree has no leaf payload. Raises
    CorruptStreamError (with the offending byte offset) on truncation,
    zero occupancy bytes, or trailing data.
    """
    data = stream.data if isinstance(stream, OccupancyStream) else bytes(stream)
    if not 1 <= depth <= MAX_DEPTH:
        raise InvalidInputError(f"depth {depth} outside [1, {MAX_DEPTH}]")
    levels = [np.zeros(1, dtype=np.int64)]
    pos = 0
    for _ in range(depth):
        nodes = levels[-1]
        if pos + nodes.size > len(data):
            raise CorruptStreamError(
                f"occupancy stream truncated at byte {len(data)}, "
                f"expected {pos + nodes.size} bytes",
                offset=len(data),
            )
        occupancy = np.frombuffer(data, dtype=np.uint8, count=nodes.size, offset=pos)
        zero = np.flatnonzero(occupancy == 0)
        if zero.size:
            raise CorruptStreamError(
                f"zero occupancy byte at offset {pos + int(zero[0])}",
                offset=pos + int(zero[0]),
            )
        pos += nodes.size
        bits = np.unpackbits(occupancy[:, None], axis=1, bitorder="little")
        row, child_bit = np.nonzero(bits)  # row-major: parents and bits ascending
        levels.append((nodes[row] << 3) | child_bit)
    if pos != len(data):
        raise CorruptStreamError(
            f"{len(data) - pos} trailing bytes after occupancy stream at offset {pos}",
            offset=pos,
        )
    return Octree(depth=depth, levels=tuple(levels))


def geometry_bpp(stream: OccupancyStream | bytes, n_points: int) -> float:
    """Raw occupancy bits divided by the original point count."""
    if n_points < 1:
        raise InvalidInputError(f"point count must be >= 1, got {n_points}")
    data = stream.data if isinstance(stream, OccupancyStream) else stream
    return 8.0 * len(data) / n_points
