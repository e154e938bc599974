"""LiDAR frame loaders and a synthetic sweep generator.

Intensities are brought onto the 8-bit scale [0, 255] at ingestion so
every downstream PSNR uses the 255 peak:

  * KITTI ``.bin``: reflectance in [0, 1] is clamped, scaled by 255 and
    rounded to integers.
  * PLY intensity: kept as-is when the property is an 8-bit integer or
    the observed values already lie in [0, 255] (values within [0, 1]
    are treated as normalized and scaled by 255); anything else is
    linearly rescaled from the observed [min, max] onto [0, 255].

Rows with non-finite coordinates or intensity are dropped with a
warning, not fatally; real sweeps contain invalid returns.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, MalformedFileError
from .geometry import PointCloud

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _drop_nonfinite(xyz: np.ndarray, attrs: np.ndarray, source: str) -> PointCloud:
    keep = np.isfinite(xyz).all(axis=1) & np.isfinite(attrs)
    dropped = int(keep.size - keep.sum())
    if dropped:
        warnings.warn(f"{source}: dropped {dropped} non-finite points", stacklevel=3)
        xyz = xyz[keep]
        attrs = attrs[keep]
    return PointCloud(xyz, attrs)


def load_kitti_bin(path) -> PointCloud:
    """Read consecutive little-endian float32 (x, y, z, reflectance) records."""
    size = os.path.getsize(path)
    if size % 16 != 0:
        raise MalformedFileError(
            f"{path}: size {size} is not a multiple of 16-byte point records"
        )
    raw = np.fromfile(path, dtype="<f4").reshape(-1, 4).astype(np.float64)
    refl = np.clip(raw[:, 3], 0.0, 1.0)  # NaN propagates into the drop pass
    attrs = np.rint(refl * 255.0)
    return _drop_nonfinite(raw[:, :3], attrs, str(path))


def _rescale_intensity(values: np.ndarray, declared_type: str) -> np.ndarray:
    if declared_type == "u1":
        return values
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return values
    lo, hi = float(finite.min()), float(finite.max())
    if 0.0 <= lo and hi <= 1.0:
        return values * 255.0
    if 0.0 <= lo and hi <= 255.0:
        return values
    if hi == lo:
        return np.clip(values, 0.0, 255.0)
    return (values - lo) / (hi - lo) * 255.0


def _parse_ply_header(f, path):
    """Returns (is_binary, elements) where elements are (name, count, props)."""
    line_no = 1
    if f.readline().strip() != b"ply":
        raise MalformedFileError(f"{path}:1: missing 'ply' magic")
    is_binary = None
    elements = []
    while True:
        line_no += 1
        raw = f.readline()
        if not raw:
            raise MalformedFileError(f"{path}:{line_no}: header ends before end_header")
        tokens = raw.decode("ascii", errors="replace").strip().split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "end_header":
            break
        if tokens[0] == "format":
            if tokens[1] == "ascii":
                is_binary = False
            elif tokens[1] == "binary_little_endian":
                is_binary = True
            else:
                raise MalformedFileError(
                    f"{path}:{line_no}: unsupported format '{tokens[1]}'"
                )
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MalformedFileError(f"{path}:{line_no}: malformed element line")
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise MalformedFileError(f"{path}:{line_no}: property before any element")
            if tokens[1] == "list":
                elements[-1][2].append((tokens[-1], "list"))
            else:
                if tokens[1] not in _PLY_TYPES:
                    raise MalformedFileError(
                        f"{path}:{line_no}: unknown property type '{tokens[1]}'"
                    )
                elements[-1][2].append((tokens[2], _PLY_TYPES[tokens[1]]))
    if is_binary is None:
        raise MalformedFileError(f"{path}: header declares no format")
    return is_binary, elements


def load_ply(path) -> PointCloud:
    """Read an ASCII or binary-little-endian PLY with x, y, z and intensity."""
    with open(path, "rb") as f:
        is_binary, elements = _parse_ply_header(f, path)
        vertex = next((e for e in elements if e[0] == "vertex"), None)
        if vertex is None:
            raise MalformedFileError(f"{path}: no 'vertex' element")
        _, count, props = vertex
        names = [p[0] for p in props]
        for needed in ("x", "y", "z", "intensity"):
            if needed not in names:
                raise MalformedFileError(f"{path}: vertex element lacks property '{needed}'")
        if any(p[1] == "list" for p in props):
            raise MalformedFileError(f"{path}: list properties are not supported on vertices")
        for name, n, eprops in elements:
            if name == "vertex":
                break
            # skip elements stored ahead of the vertices
            if any(p[1] == "list" for p in eprops):
                raise MalformedFileError(
                    f"{path}: cannot skip element '{name}' with list properties"
                )
            if is_binary:
                f.seek(n * sum(np.dtype("<" + t).itemsize for _, t in eprops), os.SEEK_CUR)
            else:
                for _ in range(n):
                    f.readline()
        if is_binary:
            dtype = np.dtype([(p[0], "<" + p[1]) for p in props])
            raw = f.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise MalformedFileError(
                    f"{path}: vertex data truncated "
                    f"({len(raw)} of {count * dtype.itemsize} bytes)"
                )
            data = np.frombuffer(raw, dtype=dtype)
            columns = {name: data[name].astype(np.float64) for name in names}
        else:
            rows = np.empty((count, len(props)))
            for i in range(count):
                line = f.readline()
                parts = line.split()
                if len(parts) < len(props):
                    raise MalformedFileError(
                        f"{path}: vertex row {i} has {len(parts)} of {len(props)} values"
                    )
                rows[i] = [float(tok) for tok in parts[: len(props)]]
            columns = {name: rows[:, i] for i, name in enumerate(names)}
    xyz = np.column_stack([columns["x"], columns["y"], columns["z"]])
    declared = props[names.index("intensity")][1]
    attrs = _rescale_intensity(columns["intensity"].astype(np.float64), declared)
    return _drop_nonfinite(xyz, attrs, str(path))


def write_ply(path, pc: PointCloud, binary: bool = False):
    """Write a cloud with float64 x, y, z, intensity properties.

    ASCII output uses 17 significant digits so coordinates round-trip
    exactly; identical clouds produce byte-identical files.
    """
    with open(path, "wb") as f:
        f.write(b"ply\n")
        f.write(b"format binary_little_endian 1.0\n" if binary else b"format ascii 1.0\n")
        f.write(b"element vertex %d\n" % len(pc))
        for name in ("x", "y", "z", "intensity"):
            f.write(b"property double %s\n" % name.encode())
        f.write(b"end_header\n")
        rows = np.column_stack([pc.xyz, pc.attributes])
        if binary:
            rows.astype("<f8").tofile(f)
        else:
            for x, y, z, a in rows:
                f.write(f"{x:.17g} {y:.17g} {z:.17g} {a:.17g}\n".encode())


@dataclass(frozen=True)
class SweepSpec:
    """Geometry of a synthetic spinning-scanner sweep over a simple scene.

    The defaults model a dense, nearly horizontal beam fan: ground rings
    between ~13 m and the range limit, a couple of tall pillars past the
    outermost ring (they pin the vertical extent of the scene without
    shadowing the ground) and one car-sized box. ``box_count`` splits
    into ceil(n/2) pillars and floor(n/2) cars.
    """

    beam_count: int = 128
    elevation_range: tuple[float, float] = (-0.135, 0.015)
    azimuth_step: float = 2.0 * math.pi / 1280.0
    max_range: float = 45.0
    sensor_height: float = 1.8
    noise_sigma: float = 0.005
    intensity_model: str = "range-decay"
    box_count: int = 3

    def __post_init__(self):
        if self.beam_count < 1:
            raise InvalidInputError(f"beam_count must be >= 1, got {self.beam_count}")
        if not self.azimuth_step > 0.0:
            raise InvalidInputError("azimuth_step must be positive")
        if not self.max_range > 0.0:
            raise InvalidInputError("max_range must be positive")
        if self.noise_sigma < 0.0:
            raise InvalidInputError("noise_sigma must be >= 0")
        if self.box_count < 0:
            raise InvalidInputError("box_count must be >= 0")
        if self.intensity_model not in ("constant", "range-decay", "checker"):
            raise InvalidInputError(
                f"unknown intensity model '{self.intensity_model}'"
            )


def synth_sweep(spec: SweepSpec, seed: int = 0) -> PointCloud:
    """Deterministic synthetic sweep: rays from a sensor above a ground
    plane dotted with random boxes, with Gaussian range noise.

    Beams fan out between the two elevations; the azimuth sweeps a full
    turn in ``azimuth_step`` increments. Point density decays with radial
    distance exactly as for a real spinning scanner: both the ring
    spacing and the along-ring spacing grow with range.
    """
    rng = np.random.default_rng(seed)
    # scene first so the draw order is independent of ray parameters
    n_pillar = (spec.box_count + 1) // 2
    n_car = spec.box_count // 2
    # pillars sit past the outermost ground ring: they bound the height
    # extent of the cloud while shadowing no ground returns
    p_r = rng.uniform(0.88 * spec.max_range, 0.96 * spec.max_range, n_pillar)
    p_az = rng.uniform(-math.pi, math.pi, n_pillar)
    p_hx = rng.uniform(0.6, 1.2, n_pillar)
    p_hy = rng.uniform(0.6, 1.2, n_pillar)
    p_hz = rng.uniform(4.0, 8.0, n_pillar)
    c_r = rng.uniform(0.3 * spec.max_range, 0.6 * spec.max_range, n_car)
    c_az = rng.uniform(-math.pi, math.pi, n_car)
    c_hx = rng.uniform(0.7, 1.1, n_car)
    c_hy = rng.uniform(0.7, 1.1, n_car)
    c_hz = rng.uniform(1.2, 1.8, n_car)
    cx = np.r_[p_r * np.cos(p_az), c_r * np.cos(c_az)]
    cy = np.r_[p_r * np.sin(p_az), c_r * np.sin(c_az)]
    half_x = np.r_[p_hx, c_hx]
    half_y = np.r_[p_hy, c_hy]
    height = np.r_[p_hz, c_hz]
    box_lo = np.column_stack([cx - half_x, cy - half_y, np.zeros(spec.box_count)])
    box_hi = np.column_stack([cx + half_x, cy + half_y, height])

    elevations = np.linspace(*spec.elevation_range, spec.beam_count)
    n_az = max(1, int(2.0 * math.pi / spec.azimuth_step))
    azimuths = -math.pi + spec.azimuth_step * np.arange(n_az)
    el = np.repeat(elevations, n_az)
    az = np.tile(azimuths, spec.beam_count)
    beam_idx = np.repeat(np.arange(spec.beam_count), n_az)
    az_idx = np.tile(np.arange(n_az), spec.beam_count)

    cos_el = np.cos(el)
    dirs = np.column_stack([cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)])
    origin = np.array([0.0, 0.0, spec.sensor_height])

    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dirs[:, 2] < 0.0, -spec.sensor_height / dirs[:, 2], np.inf)
        for lo, hi in zip(box_lo, box_hi):
            t1 = (lo - origin) / dirs
            t2 = (hi - origin) / dirs
            t_near = np.nanmax(np.minimum(t1, t2), axis=1)
            t_far = np.nanmin(np.maximum(t1, t2), axis=1)
            hit = (t_far >= t_near) & (t_far > 0.0) & (t_near > 1e-9)
            t = np.where(hit & (t_near < t), t_near, t)

    if spec.noise_sigma:
        t = t + rng.normal(0.0, spec.noise_sigma, t.shape)
    keep = np.isfinite(t) & (t > 0.0) & (t <= spec.max_range)
    t = t[keep]
    xyz = origin + t[:, None] * dirs[keep]

    if spec.intensity_model == "constant":
        attrs = np.full(t.shape, 128.0)
    elif spec.intensity_model == "range-decay":
        attrs = 255.0 * np.exp(-t / 50.0)
    else:  # checker
        attrs = 255.0 * ((beam_idx[keep] // 8 + az_idx[keep] // 64) % 2).astype(np.float64)
    return PointCloud(xyz, np.clip(attrs, 0.0, 255.0))
