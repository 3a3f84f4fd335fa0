"""Detection records and detectors that replay them from JSON-Lines files.

Boxes are ``(x, y, w, h)`` with ``(x, y)`` the top-left corner in pixels.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import BadBox, ParseError, ScoreRange

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Detection:
    frame_id: str
    class_id: int
    score: float
    bbox: tuple
    mask: tuple | None = None  # polygons as (N, 2) arrays

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ScoreRange(f"score {self.score} outside [0, 1]")
        bbox = tuple(float(v) for v in self.bbox)
        if len(bbox) != 4 or not all(math.isfinite(v) for v in bbox) or bbox[2] <= 0 or bbox[3] <= 0:
            raise BadBox(f"bbox {self.bbox} must be finite (x, y, w, h) with w, h > 0")
        object.__setattr__(self, "bbox", bbox)
        if self.mask is not None:
            polys = tuple(np.asarray(p, dtype=np.float64).reshape(-1, 2) for p in self.mask)
            if any(len(p) < 3 for p in polys):
                raise ParseError("mask polygon with fewer than 3 vertices")
            object.__setattr__(self, "mask", polys)

    def to_record(self) -> dict:
        rec = {"frame_id": self.frame_id, "class_id": self.class_id, "score": self.score, "bbox": list(self.bbox)}
        if self.mask is not None:
            rec["polygon"] = [p.reshape(-1).tolist() for p in self.mask]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Detection":
        polys = rec.get("polygon")
        mask = None if polys is None else tuple(np.asarray(p, dtype=np.float64).reshape(-1, 2) for p in polys)
        return cls(str(rec["frame_id"]), int(rec.get("class_id", 0)), float(rec["score"]), tuple(rec["bbox"]), mask)


def read_detections(path) -> dict[str, list[Detection]]:
    """Group a JSON-Lines file by ``frame_id``, keeping file order."""
    groups: dict[str, list[Detection]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                det = Detection.from_record(json.loads(line))
            except ParseError as exc:
                raise type(exc)(str(exc), line=lineno) from None
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"malformed detection: {exc}", line=lineno) from None
            groups.setdefault(det.frame_id, []).append(det)
    return groups


def write_detections(groups, path) -> None:
    with open(path, "w") as fh:
        for dets in groups.values():
            for d in dets:
                fh.write(json.dumps(d.to_record()) + "\n")


class Detector(Protocol):
    def detect(self, image, frame_id: str) -> list[Detection]: ...


class FileReplayDetector:
    """Returns the recorded detections for each frame id."""

    def __init__(self, source):
        self.detections = source if isinstance(source, dict) else read_detections(source)

    @classmethod
    def from_file(cls, path) -> "FileReplayDetector":
        return cls(read_detections(Path(path)))

    def detect(self, image, frame_id: str) -> list[Detection]:
        dets = self.detections.get(frame_id)
        if dets is None:
            log.warning("no recorded detections for frame %r", frame_id)
            return []
        return list(dets)


class StubDetector:
    """Emits the same boxes for every frame."""

    def __init__(self, boxes, score: float = 1.0, class_id: int = 0):
        self.boxes = [tuple(b) for b in boxes]
        self.score = score
        self.class_id = class_id

    def detect(self, image, frame_id: str) -> list[Detection]:
        return [Detection(frame_id, self.class_id, self.score, b) for b in self.boxes]
