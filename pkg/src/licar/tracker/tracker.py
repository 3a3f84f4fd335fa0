"""Two-stage IoU tracker in the ByteTrack / BoT-SORT family.

High-score detections are matched first against confirmed and lost tracks;
low-score detections then get a chance at the tracks left over.  Camera
motion compensation and appearance embeddings are not used.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..boxes import iou_matrix, tlwh_to_center
from .kalman import KalmanState, kf_init, kf_predict, kf_update_center
from .matching import assign


class TrackStatus(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    REMOVED = "removed"


@dataclass(frozen=True)
class TrackerConfig:
    assoc_thresh_first: float = 0.7
    assoc_thresh_second: float = 0.7
    new_track_thresh: float = 0.75
    track_buffer: int = 20
    match_thresh: float = 0.8
    # "cost": match_thresh bounds 1 - IoU (IoU >= 0.2 by default);
    # "iou": match_thresh is the minimum IoU itself
    match_semantics: str = "cost"
    score_floor: float = 0.1
    wrap_width: int | None = None

    def __post_init__(self):
        for name in ("assoc_thresh_first", "assoc_thresh_second", "new_track_thresh", "match_thresh", "score_floor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.track_buffer < 1:
            raise ValueError("track_buffer must be >= 1")
        if self.match_semantics not in ("cost", "iou"):
            raise ValueError(f"unknown match_semantics {self.match_semantics!r}")
        if self.wrap_width is not None and self.wrap_width < 1:
            raise ValueError("wrap_width must be positive")

    @property
    def min_iou(self) -> float:
        return 1.0 - self.match_thresh if self.match_semantics == "cost" else self.match_thresh


@dataclass
class Track:
    id: int
    state: KalmanState
    status: TrackStatus
    class_id: int
    last_score: float
    frames_since_update: int = 0
    hits: int = 1

    @property
    def tlwh(self):
        return self.state.tlwh


class TrackOutput(NamedTuple):
    track_id: int
    bbox: tuple
    score: float
    status: TrackStatus


@dataclass
class Tracker:
    config: TrackerConfig = field(default_factory=TrackerConfig)
    tracks: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    frame_count: int = 0
    _next_id: int = 1

    def _new_id(self) -> int:
        tid = self._next_id
        self._next_id += 1
        return tid

    def _associate(self, tracks, dets):
        if not tracks or not dets:
            return [], list(range(len(tracks))), list(range(len(dets)))
        boxes_t = np.array([t.tlwh for t in tracks])
        boxes_d = np.array([d.bbox for d in dets])
        cost = 1.0 - iou_matrix(boxes_t, boxes_d, self.config.wrap_width)
        return assign(cost, self.config.min_iou)

    def _measure(self, track: Track, det) -> np.ndarray:
        z = tlwh_to_center(det.bbox)
        w = self.config.wrap_width
        if w:
            # bring the measurement onto the same side of the seam as the track
            z[0] += w * np.round((track.state.mean[0] - z[0]) / w)
        return z

    def _apply(self, track: Track, det) -> None:
        track.state = kf_update_center(track.state, self._measure(track, det))
        if self.config.wrap_width:
            track.state.mean[0] %= self.config.wrap_width
        track.status = TrackStatus.CONFIRMED
        track.frames_since_update = 0
        track.last_score = det.score
        track.hits += 1

    def step(self, detections, frame_id=None) -> list[TrackOutput]:
        cfg = self.config
        self.frame_count += 1
        high = [d for d in detections if d.score >= cfg.assoc_thresh_first]
        low = [
            d for d in detections
            if d.score < cfg.assoc_thresh_first and cfg.score_floor <= d.score < cfg.assoc_thresh_second
        ]

        for t in self.tracks:
            t.state = kf_predict(t.state)

        pool = [t for t in self.tracks if t.status in (TrackStatus.CONFIRMED, TrackStatus.LOST)]
        tentative = [t for t in self.tracks if t.status is TrackStatus.TENTATIVE]
        updated = set()

        matches, rest_t, rest_d = self._associate(pool, high)
        for ti, di in matches:
            self._apply(pool[ti], high[di])
            updated.add(pool[ti].id)
        pool = [pool[i] for i in rest_t]
        high = [high[i] for i in rest_d]

        matches, _, _ = self._associate(pool, low)
        for ti, di in matches:
            self._apply(pool[ti], low[di])
            updated.add(pool[ti].id)

        matches, _, rest_d = self._associate(tentative, high)
        for ti, di in matches:
            self._apply(tentative[ti], high[di])
            updated.add(tentative[ti].id)
        high = [high[i] for i in rest_d]

        survivors = []
        for t in self.tracks:
            if t.id not in updated:
                t.frames_since_update += 1
                if t.status is TrackStatus.TENTATIVE or t.frames_since_update > cfg.track_buffer:
                    t.status = TrackStatus.REMOVED
                    self.removed.append(t)
                    continue
                t.status = TrackStatus.LOST
            survivors.append(t)

        for d in high:
            if d.score >= cfg.new_track_thresh:
                survivors.append(
                    Track(self._new_id(), kf_init(d.bbox), TrackStatus.TENTATIVE, d.class_id, d.score)
                )
        self.tracks = survivors

        return [
            TrackOutput(t.id, t.tlwh, t.last_score, t.status)
            for t in self.tracks
            if t.status is TrackStatus.CONFIRMED
        ]


def tracker_step(tracker: Tracker, detections, frame_id=None) -> list[TrackOutput]:
    return tracker.step(detections, frame_id)


MOT_HEADER = ("frame", "id", "x", "y", "w", "h", "score")


def format_mot_rows(frame_index: int, outputs) -> list[list[str]]:
    return [
        [str(frame_index), str(o.track_id), *(f"{v:.2f}" for v in o.bbox), f"{o.score:.4f}"]
        for o in outputs
    ]


def write_mot_csv(rows_per_frame, fh) -> None:
    """``rows_per_frame`` is an iterable of ``(frame_index, outputs)``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(MOT_HEADER)
    for frame_index, outputs in rows_per_frame:
        writer.writerows(format_mot_rows(frame_index, outputs))


def mot_csv_text(rows_per_frame) -> str:
    buf = io.StringIO()
    write_mot_csv(rows_per_frame, buf)
    return buf.getvalue()
