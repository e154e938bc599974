"""Interleaved (Morton) indices for 3-axis voxel addresses.

Bit layout: axis 0 occupies bit 3*b, axis 1 bit 3*b + 1 and axis 2 bit
3*b + 2 for each per-axis bit b. Axis 0 is x (Cartesian) or r
(cylindrical), so the least significant interleaved bit distinguishes
siblings along the first processing axis of the hierarchical transform.

Depths up to 21 fit in a signed 64-bit integer (3 * 21 = 63 bits).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

MAX_DEPTH = 21


def morton_encode(ijk: np.ndarray, depth: int) -> np.ndarray:
    """Interleave (N, 3) per-axis bin indices into (N,) int64 codes."""
    if not 1 <= depth <= MAX_DEPTH:
        raise InvalidInputError(f"depth {depth} outside [1, {MAX_DEPTH}]")
    ijk = np.asarray(ijk, dtype=np.int64)
    if ijk.ndim != 2 or ijk.shape[1] != 3:
        raise InvalidInputError(f"expected (N, 3) indices, got shape {ijk.shape}")
    if ijk.size and (ijk.min() < 0 or ijk.max() >= (1 << depth)):
        raise InvalidInputError(f"indices outside [0, 2^{depth})")
    codes = np.zeros(ijk.shape[0], dtype=np.int64)
    for b in range(depth):
        codes |= ((ijk[:, 0] >> b) & 1) << (3 * b)
        codes |= ((ijk[:, 1] >> b) & 1) << (3 * b + 1)
        codes |= ((ijk[:, 2] >> b) & 1) << (3 * b + 2)
    return codes


def morton_decode(codes: np.ndarray, depth: int) -> np.ndarray:
    """Inverse of morton_encode: (N,) codes -> (N, 3) per-axis indices."""
    if not 1 <= depth <= MAX_DEPTH:
        raise InvalidInputError(f"depth {depth} outside [1, {MAX_DEPTH}]")
    codes = np.asarray(codes, dtype=np.int64)
    ijk = np.zeros((codes.shape[0], 3), dtype=np.int64)
    for b in range(depth):
        ijk[:, 0] |= ((codes >> (3 * b)) & 1) << b
        ijk[:, 1] |= ((codes >> (3 * b + 1)) & 1) << b
        ijk[:, 2] |= ((codes >> (3 * b + 2)) & 1) << b
    return ijk
