"""Even-odd polygon rasterization sampled at pixel centres."""
from __future__ import annotations

import numpy as np


def _rasterize_one(poly: np.ndarray, width: int, height: int, wrap: bool, out: np.ndarray) -> None:
    poly = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    r_lo = max(int(np.ceil(y0.min() - 0.5)), 0)
    r_hi = min(int(np.ceil(y0.max() - 0.5)), height)
    if r_hi <= r_lo:
        return
    yc = np.arange(r_lo, r_hi, dtype=np.float64)[:, None] + 0.5
    # half-open in y so that shared vertices are counted once
    crosses = ((y0 <= yc) & (yc < y1)) | ((y1 <= yc) & (yc < y0))
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (yc - y0) / (y1 - y0)
    xs = np.where(crosses, x0 + t * (x1 - x0), np.nan)
    xs.sort(axis=1)
    n_pairs = xs.shape[1] // 2
    if n_pairs == 0:
        return
    starts = np.ceil(xs[:, 0 : 2 * n_pairs : 2] - 0.5)
    ends = np.ceil(xs[:, 1 : 2 * n_pairs : 2] - 0.5)
    ok = np.isfinite(starts) & np.isfinite(ends) & (ends > starts)
    if not ok.any():
        return
    rows = np.broadcast_to(np.arange(r_lo, r_hi)[:, None], starts.shape)[ok]
    starts, ends = starts[ok].astype(np.int64), ends[ok].astype(np.int64)
    c_lo = int(starts.min())
    span = int(ends.max()) - c_lo
    diff = np.zeros((r_hi - r_lo, span + 1), np.int32)
    np.add.at(diff, (rows - r_lo, starts - c_lo), 1)
    np.add.at(diff, (rows - r_lo, ends - c_lo), -1)
    cover = np.cumsum(diff, axis=1)[:, :span] > 0
    cols = np.arange(c_lo, c_lo + span)
    sub = out[r_lo:r_hi]
    if not wrap:
        keep = (cols >= 0) & (cols < width)
        sub[:, cols[keep]] |= cover[:, keep]
        return
    # chunks of at most one image width have unique folded columns
    for k in range(0, span, width):
        sub[:, cols[k : k + width] % width] |= cover[:, k : k + width]


def rasterize(polygons, width: int, height: int, wrap: bool = False) -> np.ndarray:
    """Union of the polygons' even-odd fills as an (height, width) bool mask.

    With ``wrap`` columns outside the image fold back modulo ``width``.
    """
    out = np.zeros((height, width), bool)
    for poly in polygons:
        _rasterize_one(poly, width, height, wrap, out)
    return out


def mask_iou(a, b, width: int, height: int, wrap: bool = False) -> float:
    ma = rasterize(a, width, height, wrap)
    mb = rasterize(b, width, height, wrap)
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 0.0
    return np.count_nonzero(ma & mb) / union


def mask_iou_matrix(masks_a, masks_b) -> np.ndarray:
    """Pairwise IoU of two lists of equally sized bool masks."""
    if not masks_a or not masks_b:
        return np.zeros((len(masks_a), len(masks_b)))
    fa = np.stack([m.ravel() for m in masks_a]).astype(np.float32)
    fb = np.stack([m.ravel() for m in masks_b]).astype(np.float32)
    inter = (fa @ fb.T).astype(np.float64)
    area_a = fa.sum(axis=1, dtype=np.float64)[:, None]
    area_b = fb.sum(axis=1, dtype=np.float64)[None, :]
    union = area_a + area_b - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
