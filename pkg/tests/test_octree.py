"""Occupancy octree construction and byte-stream serialization."""

import numpy as np
import pytest

from cylpc import (
    CoordinateSystem,
    CorruptStreamError,
    InvalidInputError,
    PointCloud,
    build_octree,
    deserialize,
    geometry_bpp,
    make_config,
    octree_from_leaf_codes,
    serialize,
    voxelize,
)


def random_leaf_codes(rng, depth, max_n):
    return np.unique(rng.integers(0, 8**depth, rng.integers(1, max_n + 1)))


def test_single_voxel_one_node_per_level():
    ot = octree_from_leaf_codes(np.array([0b101011]), 2)
    assert [lvl.size for lvl in ot.levels] == [1, 1, 1]
    assert ot.levels[1][0] == 0b101
    assert ot.n_internal_nodes == 2


def test_full_depth_one_root_byte():
    ot = octree_from_leaf_codes(np.arange(8), 1)
    stream = serialize(ot)
    assert stream.data == b"\xff"


def test_single_voxel_depth2_two_one_bit_bytes():
    ot = octree_from_leaf_codes(np.array([0b010001]), 2)
    stream = serialize(ot)
    assert len(stream.data) == 2
    assert bin(stream.data[0]).count("1") == 1
    assert bin(stream.data[1]).count("1") == 1
    # root byte has bit 0b010 set, leaf byte bit 0b001
    assert stream.data[0] == 1 << 0b010
    assert stream.data[1] == 1 << 0b001


def test_leaves_equal_voxel_set():
    rng = np.random.default_rng(0)
    for _ in range(50):
        depth = int(rng.integers(1, 11))
        codes = random_leaf_codes(rng, depth, 300)
        ot = octree_from_leaf_codes(codes, depth)
        np.testing.assert_array_equal(ot.leaves, codes)
        for lvl in range(depth):
            parents = np.unique(ot.levels[lvl + 1] >> 3)
            np.testing.assert_array_equal(parents, ot.levels[lvl])


def test_build_octree_carries_voxel_payload():
    rng = np.random.default_rng(1)
    pc = PointCloud(rng.normal(0, 5, (100, 3)), rng.uniform(0, 255, 100))
    vc = voxelize(pc, make_config(pc, CoordinateSystem.CARTESIAN, 4))
    ot = build_octree(vc)
    np.testing.assert_array_equal(ot.leaves, vc.codes)
    np.testing.assert_array_equal(ot.leaf_attributes, vc.attributes)
    np.testing.assert_array_equal(ot.leaf_weights, vc.weights)


def test_round_trip_500_random_sets():
    rng = np.random.default_rng(2)
    for _ in range(500):
        depth = int(rng.integers(1, 8))
        codes = random_leaf_codes(rng, depth, 120)
        stream = serialize(octree_from_leaf_codes(codes, depth))
        back = deserialize(stream, depth)
        np.testing.assert_array_equal(back.leaves, codes)


def test_stream_length_equals_internal_node_count_and_is_monotone():
    rng = np.random.default_rng(3)
    depth = 6
    codes = random_leaf_codes(rng, depth, 200)
    ot = octree_from_leaf_codes(codes, depth)
    stream = serialize(ot)
    assert len(stream.data) == ot.n_internal_nodes
    extra = rng.integers(0, 8**depth)
    grown = np.unique(np.append(codes, extra))
    grown_stream = serialize(octree_from_leaf_codes(grown, depth))
    assert len(grown_stream.data) >= len(stream.data)


def test_empty_stream_is_corrupt():
    with pytest.raises(CorruptStreamError):
        deserialize(b"", 1)


def test_zero_byte_is_corrupt_with_offset():
    with pytest.raises(CorruptStreamError) as exc:
        deserialize(b"\x01\x00", 2)
    assert exc.value.offset == 1


def test_truncated_and_trailing_streams_are_corrupt():
    codes = np.array([0, 9, 63])
    stream = serialize(octree_from_leaf_codes(codes, 2))
    with pytest.raises(CorruptStreamError):
        deserialize(stream.data[:-1], 2)
    with pytest.raises(CorruptStreamError):
        deserialize(stream.data + b"\x01", 2)


def test_bit_flip_fuzz_never_crashes():
    rng = np.random.default_rng(4)
    hits = {"ok": 0, "corrupt": 0}
    for _ in range(300):
        depth = int(rng.integers(1, 6))
        codes = random_leaf_codes(rng, depth, 60)
        data = bytearray(serialize(octree_from_leaf_codes(codes, depth)).data)
        pos = rng.integers(0, len(data))
        data[pos] ^= 1 << rng.integers(0, 8)
        try:
            back = deserialize(bytes(data), depth)
            assert back.leaves.size >= 1
            hits["ok"] += 1
        except CorruptStreamError:
            hits["corrupt"] += 1
    assert hits["ok"] > 0 and hits["corrupt"] > 0


def test_geometry_bpp():
    assert geometry_bpp(b"\x11" * 8, 2) == 32.0
    with pytest.raises(InvalidInputError):
        geometry_bpp(b"\x11", 0)


def test_invalid_leaf_codes_rejected():
    with pytest.raises(InvalidInputError):
        octree_from_leaf_codes(np.array([8]), 1)
    with pytest.raises(InvalidInputError):
        octree_from_leaf_codes(np.array([3, 3]), 1)
    with pytest.raises(InvalidInputError):
        octree_from_leaf_codes(np.array([], dtype=np.int64), 1)
