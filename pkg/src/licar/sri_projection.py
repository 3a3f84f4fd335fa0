"""Spherical range image geometry and pseudo-RGB composition.

Column 0 sits at azimuth +pi and azimuth decreases to the right, so the
forward direction (azimuth 0) lands at mid-width and the seam is at the
image edges.  Rows are uniform in elevation between ``elevation_max``
(row 0) and ``elevation_min``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidPixel, OutOfFov, ZeroRange
from .lidar_frame import LidarFrame, RawPoint, percentile_ranks

TWO_PI = 2.0 * math.pi
COMPOSE_CHANNELS = ("reflectivity", "nir", "signal")
NORMALIZATION_METHODS = ("minmax", "percentile_clip", "fixed_scale")


@dataclass(frozen=True)
class ProjectionConfig:
    width: int = 2048
    height: int = 128
    elevation_max: float = 22.5  # degrees
    elevation_min: float = -22.5

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("projection grid must be at least 1x1")
        if not self.elevation_max > self.elevation_min:
            raise ValueError("elevation_max must exceed elevation_min")

    @property
    def elevation_span(self) -> float:
        return math.radians(self.elevation_max - self.elevation_min)


@dataclass(frozen=True)
class NormalizationConfig:
    method: str = "percentile_clip"
    clip_low: float = 1.0
    clip_high: float = 99.0
    fixed_divisor: float = 256.0
    # source channel for R, G, B
    channel_order: tuple = field(default=COMPOSE_CHANNELS)

    def __post_init__(self):
        if self.method not in NORMALIZATION_METHODS:
            raise ValueError(f"unknown normalization method {self.method!r}")
        if not 0 <= self.clip_low < self.clip_high <= 100:
            raise ValueError("need 0 <= clip_low < clip_high <= 100")
        if not self.fixed_divisor > 0:
            raise ValueError("fixed_divisor must be positive")
        order = tuple(self.channel_order)
        if len(order) != 3 or any(c not in COMPOSE_CHANNELS for c in order):
            raise ValueError(f"channel_order must name three of {COMPOSE_CHANNELS}")
        object.__setattr__(self, "channel_order", order)


@dataclass(frozen=True, eq=False)
class PseudoRgbImage:
    # (H, W, 3) uint8; may be a view onto channel-planar storage
    pixels: np.ndarray

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def save(self, path) -> Path:
        path = Path(path)
        Image.fromarray(np.ascontiguousarray(self.pixels), mode="RGB").save(path)
        return path


def project_points(xyz, cfg: ProjectionConfig):
    """Vectorised projection of an (N, 3) array.

    Returns ``(rows, cols, range_mm, in_fov)``; rows and cols of
    out-of-FOV points are meaningless.
    """
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    norm = np.sqrt(x * x + y * y + z * z)
    with np.errstate(invalid="ignore", divide="ignore"):
        elev = np.arcsin(np.clip(z / norm, -1.0, 1.0))
    azim = np.arctan2(y, x)
    cols = np.floor(np.mod(math.pi - azim, TWO_PI) / TWO_PI * cfg.width).astype(np.int64)
    np.clip(cols, 0, cfg.width - 1, out=cols)
    emax, emin = math.radians(cfg.elevation_max), math.radians(cfg.elevation_min)
    in_fov = (norm > 0) & (elev >= emin) & (elev <= emax)
    rows = np.floor((emax - elev) / (emax - emin) * cfg.height)
    # elevation exactly at the lower FOV edge belongs to the last row
    rows = np.clip(np.nan_to_num(rows, nan=-1.0), -1, cfg.height).astype(np.int64)
    rows[in_fov & (rows == cfg.height)] = cfg.height - 1
    in_fov &= (rows >= 0) & (rows < cfg.height)
    range_mm = np.floor(norm * 1000.0 + 0.5).astype(np.int64)
    return rows, cols, range_mm, in_fov


def project_point(p, cfg: ProjectionConfig = ProjectionConfig()) -> tuple[int, int, int]:
    """Map a sensor-frame position to ``(row, col, range_mm)``."""
    if isinstance(p, RawPoint):
        p = (p.x, p.y, p.z)
    if all(v == 0 for v in p):
        raise ValueError("cannot project the sensor origin")
    rows, cols, rng, ok = project_points([p], cfg)
    if not ok[0]:
        raise OutOfFov(f"point {tuple(p)} lies outside the vertical field of view")
    return int(rows[0]), int(cols[0]), int(rng[0])


def unproject_pixels(rows, cols, range_mm, cfg: ProjectionConfig) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    r = np.asarray(range_mm, dtype=np.float64) / 1000.0
    azim = math.pi - (cols + 0.5) / cfg.width * TWO_PI
    elev = math.radians(cfg.elevation_max) - (rows + 0.5) / cfg.height * cfg.elevation_span
    ce = np.cos(elev)
    return np.stack([r * ce * np.cos(azim), r * ce * np.sin(azim), r * np.sin(elev)], axis=-1)


def unproject_pixel(row: int, col: int, range_mm, cfg: ProjectionConfig = ProjectionConfig()):
    """Point on the ray through the pixel centre at the given range."""
    if not (0 <= row < cfg.height and 0 <= col < cfg.width):
        raise InvalidPixel(f"pixel ({row}, {col}) outside {cfg.height}x{cfg.width} grid")
    if range_mm <= 0:
        raise ZeroRange("range must be positive")
    x, y, z = unproject_pixels(row, col, range_mm, cfg)
    return float(x), float(y), float(z)


def points_to_array(points) -> np.ndarray:
    """(N, 6) float array of x, y, z, reflectivity, nir, signal."""
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 6).astype(np.float64)
    return np.array(
        [(p.x, p.y, p.z, p.reflectivity, p.nir, p.signal) for p in points], dtype=np.float64
    ).reshape(-1, 6)


def pointcloud_to_sri(points, cfg: ProjectionConfig = ProjectionConfig()) -> tuple[LidarFrame, int]:
    """Scatter points into a frame; returns the frame and the out-of-FOV drop count.

    The nearest return wins each pixel; equal ranges keep the earlier input
    point.  No hole filling is performed.
    """
    arr = points_to_array(points)
    rows, cols, rng_mm, ok = project_points(arr[:, :3], cfg)
    dropped = int(np.count_nonzero(~ok))
    idx = np.flatnonzero(ok)
    norm = np.linalg.norm(arr[idx, :3], axis=1)
    order = idx[np.lexsort((idx, norm))]
    lin = rows[order] * cfg.width + cols[order]
    _, first = np.unique(lin, return_index=True)
    winners = order[first]
    pix = lin[first]

    n = cfg.width * cfg.height
    planes = {}
    rng_plane = np.zeros(n, np.uint32)
    rng_plane[pix] = np.maximum(rng_mm[winners], 1)
    for k, name in enumerate(("reflectivity", "nir", "signal"), start=3):
        plane = np.zeros(n, np.uint16)
        plane[pix] = arr[winners, k]
        planes[name] = plane.reshape(cfg.height, cfg.width)
    frame = LidarFrame(rng_plane.reshape(cfg.height, cfg.width), **planes)
    return frame, dropped


def channel_bounds(values: np.ndarray, cfg: NormalizationConfig) -> tuple[float, float]:
    """Input interval mapped onto [0, 255] for the minmax / percentile methods."""
    return _bounds_from_hist(np.bincount(np.asarray(values, dtype=np.intp).ravel(), minlength=65536), cfg)


def _bounds_from_hist(hist: np.ndarray, cfg: NormalizationConfig) -> tuple[float, float]:
    cum = np.cumsum(hist)
    n = int(cum[-1])
    if n == 0:
        return 0.0, 0.0
    if cfg.method == "minmax":
        nz = np.flatnonzero(hist)
        return float(nz[0]), float(nz[-1])
    # smallest value whose cumulative count reaches the 1-based nearest rank
    ranks = np.array(percentile_ranks(n, (cfg.clip_low, cfg.clip_high))) + 1
    lo, hi = np.searchsorted(cum, ranks, side="left")
    return float(lo), float(hi)


def _lut(cfg: NormalizationConfig, bounds) -> np.ndarray:
    if cfg.method == "fixed_scale":
        out = np.floor(np.arange(65536, dtype=np.float64) / cfg.fixed_divisor)
        return np.clip(out, 0, 255).astype(np.uint8)
    lo, hi = bounds
    if hi <= lo:
        return np.zeros(65536, np.uint8)
    lo_i, hi_i = int(np.ceil(lo)), int(np.floor(hi))
    lut = np.empty(65536, np.uint8)
    lut[: max(lo_i, 0)] = 0
    lut[min(hi_i, 65535) + 1 :] = 255
    v = np.arange(max(lo_i, 0), min(hi_i, 65535) + 1, dtype=np.float64)
    lut[v.astype(np.intp)] = np.floor((v - lo) / (hi - lo) * 255.0 + 0.5)
    return lut


def _hist_valid(plane: np.ndarray, holes: np.ndarray) -> np.ndarray:
    hist = np.bincount(plane.ravel(), minlength=65536)
    if holes.size:
        hist -= np.bincount(plane.ravel()[holes], minlength=65536)
    return hist


def normalize_channel(plane, valid, cfg: NormalizationConfig = NormalizationConfig(), bounds=None) -> np.ndarray:
    """Map a 16-bit plane to 8 bits; holes become 0.

    ``bounds`` overrides the per-plane interval, which is how global
    (multi-frame) normalization is applied.
    """
    plane = np.asarray(plane)
    valid = np.asarray(valid, dtype=bool)
    if plane.shape != valid.shape:
        raise ValueError(f"plane shape {plane.shape} does not match mask shape {valid.shape}")
    return _normalize(plane.astype(np.uint16, copy=False), np.flatnonzero(~valid.ravel()), cfg, bounds)


def _normalize(plane: np.ndarray, holes: np.ndarray, cfg: NormalizationConfig, bounds, out=None) -> np.ndarray:
    if cfg.method != "fixed_scale" and bounds is None:
        bounds = _bounds_from_hist(_hist_valid(plane, holes), cfg)
    if out is None:
        out = np.empty(plane.shape, np.uint8)
    np.take(_lut(cfg, bounds), plane, out=out)
    out.ravel()[holes] = 0
    return out


def global_bounds(frames, cfg: NormalizationConfig) -> dict:
    """Per-channel bounds pooled over several frames."""
    result = {}
    for ch in set(cfg.channel_order):
        pooled = np.concatenate([f.plane(ch)[f.valid] for f in frames]) if frames else np.empty(0)
        result[ch] = channel_bounds(pooled, cfg)
    return result


def compose_pseudo_rgb(frame: LidarFrame, cfg: NormalizationConfig = NormalizationConfig(), bounds=None) -> PseudoRgbImage:
    holes = np.flatnonzero(frame.range.ravel() == 0)
    # planar buffer: each channel is written contiguously, no interleave pass
    planar = np.empty((3, frame.height, frame.width), np.uint8)
    done = {}
    for i, ch in enumerate(cfg.channel_order):
        if ch in done:
            planar[i] = planar[done[ch]]
            continue
        _normalize(frame.plane(ch), holes, cfg, None if bounds is None else bounds[ch], out=planar[i])
        done[ch] = i
    img = PseudoRgbImage(planar.transpose(1, 2, 0))
    assert (img.height, img.width) == (frame.height, frame.width)
    return img
