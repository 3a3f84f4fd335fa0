"""Frame-by-frame orchestration and per-stage timing.

A frame goes through three timed stages: preprocess (load the four planes
and compose the pseudo-RGB image), inference (the detector) and postprocess
(tracker step plus MOT row serialisation).
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .config import PipelineConfig
from .errors import InsufficientFrames, MissingChannel
from .lidar_frame import CHANNEL_FILES, load_frame
from .sri_projection import compose_pseudo_rgb
from .tracker import Tracker
from .tracker.tracker import format_mot_rows

STAGES = ("preprocess", "inference", "postprocess")


def list_frame_dirs(root) -> list[Path]:
    """Sub-directories of ``root`` holding a range plane, sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise MissingChannel(f"frames directory {root} does not exist")
    return sorted(p for p in root.iterdir() if (p / CHANNEL_FILES["range"]).is_file())


def draw_overlay(image, outputs, wrap_width=None):
    """Boxes and track ids drawn onto a copy of the pseudo-RGB image."""
    pil = Image.fromarray(np.ascontiguousarray(image.pixels), mode="RGB")
    draw = ImageDraw.Draw(pil)
    for o in outputs:
        x, y, w, h = o.bbox
        shifts = (0.0,) if not wrap_width else (-wrap_width, 0.0, wrap_width)
        for s in shifts:
            x0 = x + s
            if x0 + w < 0 or x0 > pil.width:
                continue
            draw.rectangle([x0, y, x0 + w, y + h], outline=(255, 255, 0))
            draw.text((x0 + 1, max(y - 10, 0)), str(o.track_id), fill=(255, 255, 0))
    return pil


def run_tracking(frame_ids, detector, config: PipelineConfig, frames_root=None, overlay_dir=None):
    """Yield ``(frame_index, outputs)`` for frames in order, 1-based."""
    tracker = Tracker(config.tracker)
    if overlay_dir is not None:
        Path(overlay_dir).mkdir(parents=True, exist_ok=True)
    for index, frame_id in enumerate(frame_ids, start=1):
        image = None
        if frames_root is not None:
            frame = load_frame(Path(frames_root) / frame_id, config.range_scale_mm)
            image = compose_pseudo_rgb(frame, config.normalization)
        outputs = tracker.step(detector.detect(image, frame_id), frame_id)
        if overlay_dir is not None and image is not None:
            draw_overlay(image, outputs, config.tracker.wrap_width).save(Path(overlay_dir) / f"{frame_id}.png")
        yield index, outputs


@dataclass
class TimingReport:
    preprocess: np.ndarray  # per measured frame, milliseconds
    inference: np.ndarray
    postprocess: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.preprocess + self.inference + self.postprocess

    def median(self, stage: str) -> float:
        return float(np.median(getattr(self, stage)))

    def p95(self, stage: str) -> float:
        return float(np.percentile(getattr(self, stage), 95))

    def decomposition(self, digits: int = 1) -> str:
        """Stage medians joined as ``pre+inf+post``."""
        return "+".join(f"{self.median(s):.{digits}f}" for s in STAGES)

    def to_dict(self) -> dict:
        out = {"frames": int(len(self.preprocess)), "decomposition": self.decomposition()}
        for s in STAGES + ("total",):
            out[s] = {"median_ms": self.median(s), "p95_ms": self.p95(s)}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def bench(frame_dirs, detector, config: PipelineConfig, warmup=None, repetitions=None) -> TimingReport:
    """Time the full per-frame pipeline, cycling through ``frame_dirs``."""
    warmup = config.timing.warmup if warmup is None else warmup
    repetitions = config.timing.repetitions if repetitions is None else repetitions
    frame_dirs = [Path(p) for p in frame_dirs]
    if len(frame_dirs) < warmup + 1:
        raise InsufficientFrames(f"need at least {warmup + 1} frames, got {len(frame_dirs)}")
    tracker = Tracker(config.tracker)
    clock = time.perf_counter_ns
    times = np.zeros((repetitions, 3))
    for i in range(warmup + repetitions):
        path = frame_dirs[i % len(frame_dirs)]
        t0 = clock()
        frame = load_frame(path, config.range_scale_mm)
        image = compose_pseudo_rgb(frame, config.normalization)
        t1 = clock()
        dets = detector.detect(image, path.name)
        t2 = clock()
        outputs = tracker.step(dets, path.name)
        format_mot_rows(i + 1, outputs)
        t3 = clock()
        if i >= warmup:
            times[i - warmup] = ((t1 - t0) / 1e6, (t2 - t1) / 1e6, (t3 - t2) / 1e6)
    return TimingReport(times[:, 0], times[:, 1], times[:, 2])
