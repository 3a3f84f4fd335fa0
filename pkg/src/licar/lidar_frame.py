"""Structured LiDAR frames: four co-registered planes on an H x W grid.

A frame directory holds ``range.png``, ``reflect.png``, ``nir.png`` and
``signal.png``, each a single-channel 16-bit grayscale PNG.  Range is stored
on disk in units of ``range_scale_mm`` millimetres (default 4) and held in
memory as uint32 millimetres.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BadEncoding, DimensionMismatch, EmptyChannel, MissingChannel, ParseError

CHANNELS = ("range", "reflectivity", "nir", "signal")
CHANNEL_FILES = {
    "range": "range.png",
    "reflectivity": "reflect.png",
    "nir": "nir.png",
    "signal": "signal.png",
}
DEFAULT_RANGE_SCALE_MM = 4
POINT_FIELDS = ("x", "y", "z", "reflectivity", "nir", "signal")


@dataclass(frozen=True, eq=False)
class LidarFrame:
    range: np.ndarray  # (H, W) uint32 millimetres, 0 = no return
    reflectivity: np.ndarray  # (H, W) uint16
    nir: np.ndarray
    signal: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.range)
        if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
            raise DimensionMismatch(f"range plane must be a non-empty 2D grid, got shape {shape}")
        object.__setattr__(self, "range", _frozen(self.range, np.uint32))
        for name in CHANNELS[1:]:
            plane = getattr(self, name)
            if np.shape(plane) != shape:
                raise DimensionMismatch(f"{name} plane has shape {np.shape(plane)}, expected {shape}")
            object.__setattr__(self, name, _frozen(plane, np.uint16))

    @property
    def height(self) -> int:
        return self.range.shape[0]

    @property
    def width(self) -> int:
        return self.range.shape[1]

    @property
    def valid(self) -> np.ndarray:
        """Boolean mask of pixels that carry a return."""
        return self.range != 0

    def plane(self, channel: str) -> np.ndarray:
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
        return getattr(self, channel)

    def equals(self, other: "LidarFrame") -> bool:
        return all(np.array_equal(self.plane(c), other.plane(c)) for c in CHANNELS)

    @classmethod
    def empty(cls, width: int = 2048, height: int = 128) -> "LidarFrame":
        z16 = np.zeros((height, width), np.uint16)
        return cls(np.zeros((height, width), np.uint32), z16, z16, z16)


@dataclass(frozen=True)
class RawPoint:
    x: float
    y: float
    z: float
    reflectivity: int = 0
    nir: int = 0
    signal: int = 0


@dataclass(frozen=True)
class ChannelStats:
    min: int
    max: int
    p01: int
    p99: int
    valid_count: int


def _frozen(plane, dtype) -> np.ndarray:
    arr = np.array(plane, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _read_plane(path: Path) -> np.ndarray:
    if not path.is_file():
        raise MissingChannel(f"missing channel file {path}")
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16B", "I;16L"):
            raise BadEncoding(f"{path.name}: expected 16-bit single-channel PNG, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint16)


def load_frame(directory, range_scale_mm: int = DEFAULT_RANGE_SCALE_MM) -> LidarFrame:
    directory = Path(directory)
    planes = {c: _read_plane(directory / CHANNEL_FILES[c]) for c in CHANNELS}
    shapes = {c: p.shape for c, p in planes.items()}
    if len(set(shapes.values())) != 1:
        raise DimensionMismatch(f"channel planes disagree in size: {shapes}")
    rng = planes["range"].astype(np.uint32) * np.uint32(range_scale_mm)
    return LidarFrame(rng, planes["reflectivity"], planes["nir"], planes["signal"])


def save_frame(frame: LidarFrame, directory, range_scale_mm: int = DEFAULT_RANGE_SCALE_MM) -> Path:
    """Write the four planes as 16-bit PNGs.

    Range is divided by ``range_scale_mm`` with rounding and saturates at
    65535 units; a non-zero range never rounds down to a hole.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = frame.range.astype(np.uint64)
    units = (rng + range_scale_mm // 2) // range_scale_mm
    units = np.where(rng > 0, np.maximum(units, 1), 0)
    units = np.minimum(units, 65535).astype(np.uint16)
    _write_plane(units, directory / CHANNEL_FILES["range"])
    for c in CHANNELS[1:]:
        _write_plane(frame.plane(c), directory / CHANNEL_FILES[c])
    return directory


def _write_plane(plane: np.ndarray, path: Path) -> None:
    Image.fromarray(np.ascontiguousarray(plane, dtype=np.uint16)).save(path)


def load_points(path) -> list[RawPoint]:
    points = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != POINT_FIELDS:
            raise ParseError(f"expected header {','.join(POINT_FIELDS)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(POINT_FIELDS):
                raise ParseError(f"expected {len(POINT_FIELDS)} fields, got {len(row)}", line=lineno)
            try:
                x, y, z = (float(v) for v in row[:3])
                chans = [int(v) for v in row[3:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if not all(math.isfinite(v) for v in (x, y, z)):
                raise ParseError("non-finite coordinate", line=lineno)
            if any(not 0 <= c <= 65535 for c in chans):
                raise ParseError("channel value outside u16 range", line=lineno)
            if x == 0 and y == 0 and z == 0:
                continue
            points.append(RawPoint(x, y, z, *chans))
    return points


def save_points(points, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POINT_FIELDS)
        for p in points:
            writer.writerow([repr(p.x), repr(p.y), repr(p.z), p.reflectivity, p.nir, p.signal])


def percentile_ranks(n: int, percents) -> list[int]:
    """Zero-based indices selected by nearest-rank for each percentile."""
    # p * n before dividing keeps integral ranks exact
    return [min(max(1, math.ceil(p * n / 100.0)), n) - 1 for p in percents]


def channel_stats(frame: LidarFrame, channel: str) -> ChannelStats:
    values = frame.plane(channel)[frame.valid]
    n = values.size
    if n == 0:
        raise EmptyChannel(f"frame has no valid returns for channel {channel!r}")
    lo_idx, hi_idx = percentile_ranks(n, (1, 99))
    part = np.partition(values, sorted({0, lo_idx, hi_idx, n - 1}))
    return ChannelStats(
        min=int(part[0]), max=int(part[n - 1]), p01=int(part[lo_idx]), p99=int(part[hi_idx]), valid_count=int(n)
    )
