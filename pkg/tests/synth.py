"""Synthetic data shared by the tests."""
from __future__ import annotations

import numpy as np

from licar.detections import Detection
from licar.lidar_frame import LidarFrame


def sensor_like_frame(rng, width=2048, height=128, shift=0) -> LidarFrame:
    """Frame with sensor-like statistics.

    Ground plus box-shaped obstacles, no-return sky above them, centimetre
    range noise, 8-bit-scale reflectivity and Poisson photon counts.
    """
    rows = np.arange(height)[:, None]
    cols = (np.arange(width)[None, :] + shift) % width
    elev = np.deg2rad(22.5 - (rows + 0.5) / height * 45.0)
    ground = np.where(elev < -0.01, 1.2 / np.sin(-np.minimum(elev, -0.01)), 0.0)
    obstacles = 8.0 + 6.0 * np.sin(cols / 150.0) ** 2 + 3.0 * (np.sin(cols / 23.0) > 0.6)
    top = np.tan(elev) * obstacles < 2.5
    rng_m = np.where((ground > 0) & (ground < obstacles), ground, np.where(top, obstacles, 0.0))
    rng_m = np.broadcast_to(rng_m, (height, width)).copy()
    hit = rng_m > 0
    range_mm = np.where(hit, rng_m * 1000 + rng.normal(0, 15, rng_m.shape), 0)
    range_mm = (np.maximum(range_mm, 0) // 4 * 4).astype(np.uint32)
    hit = range_mm > 0
    material = 40 + 60 * (np.sin(cols / 37.0) > 0) + 30 * (rows > 90)
    refl = np.where(hit, np.clip(material + rng.normal(0, 4, (height, width)), 0, 255), 0)
    ambient = 300 + 250 * np.cos(cols / 300.0) + 2.0 * (height - rows)
    nir = rng.poisson(np.broadcast_to(ambient, (height, width)))
    expected = np.where(hit, 4e4 * refl / 255.0 / np.maximum(rng_m, 1.0) ** 2 + 20, 0)
    signal = rng.poisson(expected)
    return LidarFrame(
        range_mm,
        refl.astype(np.uint16),
        np.clip(nir, 0, 65535).astype(np.uint16),
        np.clip(signal, 0, 65535).astype(np.uint16),
    )


def car_detections(frame_id, n=14, t=0, width=2048, score=0.9):
    return [
        Detection(frame_id, 0, score, ((140 * k + 3 * t) % (width - 80), 60 + (k % 3) * 10, 70.0, 28.0))
        for k in range(n)
    ]
