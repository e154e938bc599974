"""LiDAR point cloud codec built on cylindrical (or Cartesian) voxelization.

Pipeline: voxelize -> octree occupancy stream (geometry) -> hierarchical
attribute transform -> uniform quantization -> adaptive run-length /
Golomb-Rice coding -> one self-contained bitstream. A rate-distortion
harness (PSNR, bits per point, Bjontegaard deltas) and a CLI sit on top.
"""

from .bitstream import DecodedCloud, EncodeSummary, decode_cloud, encode_cloud
from .coeff_codec import (
    QuantizedStream,
    RlgrPayload,
    dequantize,
    quantize,
    rlgr_decode,
    rlgr_encode,
)
from .errors import (
    CorruptStreamError,
    CylpcError,
    InvalidConfigError,
    InvalidInputError,
    MalformedFileError,
    OutOfRangeError,
)
from .geometry import (
    BoundingBox,
    BoundingCylinder,
    CartesianPoint,
    CylindricalPoint,
    PointCloud,
    bounding_box,
    bounding_cylinder,
    to_cartesian,
    to_cylindrical,
)
from .ingest import SweepSpec, load_kitti_bin, load_ply, synth_sweep, write_ply
from .metrics import (
    LOSSLESS,
    BdMetrics,
    RatePoint,
    RdCurve,
    attribute_bpp,
    bd_metrics,
    psnr_attribute,
    read_rd_csv,
    write_rd_csv,
)
from .octree import (
    OccupancyStream,
    Octree,
    build_octree,
    deserialize,
    geometry_bpp,
    octree_from_leaf_codes,
    serialize,
)
from .raht import (
    CoefficientStream,
    WeightedLeaf,
    raht_forward,
    raht_forward_arrays,
    raht_inverse,
    raht_inverse_arrays,
)
from .voxelizer import (
    CoordinateSystem,
    ErrorModel,
    VoxelGridConfig,
    VoxelizedCloud,
    assign_codes,
    devoxelize,
    expected_error_cartesian,
    expected_error_cylindrical,
    knn_mean_distance,
    make_config,
    occupancy_stats,
    voxel_centers,
    voxelization_error_cartesian,
    voxelization_error_cylindrical,
    voxelize,
)

__version__ = "0.1.0"
