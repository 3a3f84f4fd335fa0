"""Axis-aligned box helpers. Boxes are ``(x, y, w, h)`` with a top-left origin."""
from __future__ import annotations

import numpy as np


def tlwh_to_center(box):
    x, y, w, h = box
    return np.array([x + w / 2.0, y + h / 2.0, w, h], dtype=np.float64)


def center_to_tlwh(c):
    cx, cy, w, h = c[:4]
    return (float(cx - w / 2.0), float(cy - h / 2.0), float(w), float(h))


def iou_matrix(a, b, wrap_width=None) -> np.ndarray:
    """Pairwise IoU between (N, 4) and (M, 4) box arrays.

    With ``wrap_width`` the image is a cylinder of that circumference and the
    best overlap over the three horizontal placements of ``b`` is kept.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ax0, ay0 = a[:, None, 0], a[:, None, 1]
    ax1, ay1 = ax0 + a[:, None, 2], ay0 + a[:, None, 3]
    area_a = a[:, None, 2] * a[:, None, 3]
    area_b = b[None, :, 2] * b[None, :, 3]
    by0, by1 = b[None, :, 1], b[None, :, 1] + b[None, :, 3]
    ih = np.clip(np.minimum(ay1, by1) - np.maximum(ay0, by0), 0, None)
    shifts = (0.0,) if not wrap_width else (0.0, -float(wrap_width), float(wrap_width))
    inter = np.zeros((len(a), len(b)))
    for s in shifts:
        bx0 = b[None, :, 0] + s
        bx1 = bx0 + b[None, :, 2]
        iw = np.clip(np.minimum(ax1, bx1) - np.maximum(ax0, bx0), 0, None)
        np.maximum(inter, iw * ih, out=inter)
    union = area_a + area_b - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def iou(a, b, wrap_width=None) -> float:
    return float(iou_matrix([a], [b], wrap_width)[0, 0])
