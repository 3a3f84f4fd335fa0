"""Box and mask detection metrics: precision, recall, AP@0.5, mAP@0.5:0.95.

Matching is greedy by descending score against the best unmatched ground
truth; AP uses 101-point interpolation of the monotone precision envelope;
precision and recall are reported at the confidence that maximises F1 on the
IoU 0.5 curve.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .annotations import InstanceAnnotation
from .boxes import iou_matrix
from .raster import mask_iou_matrix, rasterize

log = logging.getLogger(__name__)

IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * k, 2) for k in range(10))
# i / 100 is correctly rounded, so a recall of exactly 7/20 reaches 0.35
RECALL_POINTS = np.arange(101) / 100.0
BRANCHES = ("box", "mask")


@dataclass(eq=False)
class MatchResult:
    thresholds: tuple
    scores: np.ndarray  # (D,) in descending order
    tp: np.ndarray  # (D, T) bool, rows aligned with ``scores``
    gt_matched: np.ndarray  # (G, T) bool
    order: np.ndarray  # index into the caller's detection list for each row

    @property
    def n_gt(self) -> int:
        return self.gt_matched.shape[0]


@dataclass
class EvalReport:
    branch: str
    precision: float
    recall: float
    ap50: float
    map50_95: float
    ap_per_threshold: list
    confidence: float = 0.0
    n_gt: int = 0
    n_det: int = 0
    per_class: dict = field(default_factory=dict)
    curve: list = field(default_factory=list)  # (precision, recall, confidence) at IoU 0.5
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "precision": self.precision,
            "recall": self.recall,
            "ap50": self.ap50,
            "map50_95": self.map50_95,
            "ap_per_threshold": dict(zip((f"{t:.2f}" for t in IOU_THRESHOLDS), self.ap_per_threshold)),
            "confidence": self.confidence,
            "n_gt": self.n_gt,
            "n_det": self.n_det,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "warnings": list(self.warnings),
        }


def _polygons(obj):
    polys = obj.polygons if isinstance(obj, InstanceAnnotation) else getattr(obj, "mask", None)
    if polys:
        return polys
    x, y, w, h = obj.bbox
    return (np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h]]),)


def iou_table(dets, gts, kind="box", wrap_width=None, width=2048, height=128) -> np.ndarray:
    """(D, G) IoU matrix for the chosen branch.

    Objects without a mask take part in the mask branch as their box.
    """
    if kind == "box":
        return iou_matrix([d.bbox for d in dets], [g.bbox for g in gts], wrap_width)
    if kind != "mask":
        raise ValueError(f"unknown branch {kind!r}")
    wrap = bool(wrap_width)
    w = wrap_width or width
    md = [rasterize(_polygons(d), w, height, wrap) for d in dets]
    mg = [rasterize(_polygons(g), w, height, wrap) for g in gts]
    return mask_iou_matrix(md, mg)


def greedy_match(ious, scores, thresholds=IOU_THRESHOLDS) -> MatchResult:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    ious = np.asarray(ious, dtype=np.float64)
    if ious.ndim != 2:
        ious = ious.reshape(len(scores), -1)
    order = np.argsort(-scores, kind="stable")
    n_det, n_gt = ious.shape
    tp = np.zeros((n_det, len(thresholds)), bool)
    gt_matched = np.zeros((n_gt, len(thresholds)), bool)
    for k, thr in enumerate(thresholds):
        taken = gt_matched[:, k]
        for row, d in enumerate(order):
            if n_gt == 0:
                break
            cand = np.where(taken, -1.0, ious[d])
            g = int(np.argmax(cand))
            if cand[g] >= thr:
                taken[g] = True
                tp[row, k] = True
    return MatchResult(tuple(thresholds), scores[order], tp, gt_matched, order)


def match_predictions(dets, gts, iou_thresh=0.5, kind="box", wrap_width=None, width=2048, height=128) -> MatchResult:
    thresholds = (iou_thresh,) if np.isscalar(iou_thresh) else tuple(iou_thresh)
    ious = iou_table(dets, gts, kind, wrap_width, width, height)
    return greedy_match(ious, [d.score for d in dets], thresholds)


def pr_curve(match: MatchResult, n_gt: int, threshold_index: int = 0) -> list[tuple[float, float, float]]:
    """One (precision, recall, confidence) point per distinct confidence, descending."""
    if len(match.scores) == 0:
        return []
    tp = match.tp[:, threshold_index].astype(np.float64)
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    scores = match.scores
    # last row of each run of equal scores
    ends = np.flatnonzero(np.append(scores[1:] != scores[:-1], True))
    prec = cum_tp[ends] / (cum_tp[ends] + cum_fp[ends])
    rec = cum_tp[ends] / n_gt if n_gt > 0 else np.zeros(len(ends))
    return [(float(p), float(r), float(scores[e])) for p, r, e in zip(prec, rec, ends)]


def average_precision(curve) -> float:
    """101-point interpolated AP over a curve from :func:`pr_curve`."""
    if not curve:
        return 0.0
    prec = np.array([c[0] for c in curve])
    rec = np.array([c[1] for c in curve])
    envelope = np.maximum.accumulate(prec[::-1])[::-1]
    idx = np.searchsorted(rec, RECALL_POINTS, side="left")
    sampled = np.where(idx < len(rec), envelope[np.minimum(idx, len(rec) - 1)], 0.0)
    return float(sampled.mean())


def best_f1(curve) -> tuple[float, float, float]:
    """(precision, recall, confidence) at the first point of maximal F1."""
    best = (0.0, 0.0, 0.0)
    best_f = -1.0
    for p, r, c in curve:
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        if f > best_f:
            best_f, best = f, (p, r, c)
    return best


def _pooled_match(dets_per_frame, gts_per_frame, kind, wrap_width, width, height) -> tuple[MatchResult, int]:
    frames = list(dict.fromkeys(list(gts_per_frame) + list(dets_per_frame)))
    scores, tps, n_gt = [], [], 0
    for f in frames:
        dets = dets_per_frame.get(f, [])
        gts = gts_per_frame.get(f, [])
        n_gt += len(gts)
        m = match_predictions(dets, gts, IOU_THRESHOLDS, kind, wrap_width, width, height)
        scores.append(m.scores)
        tps.append(m.tp)
    scores = np.concatenate(scores) if scores else np.empty(0)
    tp = np.concatenate(tps) if tps else np.zeros((0, len(IOU_THRESHOLDS)), bool)
    order = np.argsort(-scores, kind="stable")
    pooled = MatchResult(IOU_THRESHOLDS, scores[order], tp[order], np.zeros((n_gt, len(IOU_THRESHOLDS)), bool), order)
    return pooled, n_gt


def evaluate(dets_per_frame, gts_per_frame, kind="box", wrap_width=None, width=2048, height=128) -> EvalReport:
    """Score detections against ground truth for one branch.

    Both arguments map frame id to a list of objects with ``bbox`` and
    ``class_id``; detections also need ``score``.  Metrics are computed per
    class present in the ground truth and then averaged.
    """
    classes = sorted({g.class_id for gts in gts_per_frame.values() for g in gts})
    n_det = sum(len(v) for v in dets_per_frame.values())
    if not classes:
        msg = "no ground truth instances; recall reported as 0"
        log.warning(msg)
        zeros = [0.0] * len(IOU_THRESHOLDS)
        return EvalReport(kind, 0.0, 0.0, 0.0, 0.0, zeros, n_det=n_det, warnings=[msg])

    per_class = {}
    aps = []
    prs = []
    curve50 = []
    for c in classes:
        d_c = {f: [d for d in ds if d.class_id == c] for f, ds in dets_per_frame.items()}
        g_c = {f: [g for g in gs if g.class_id == c] for f, gs in gts_per_frame.items()}
        match, n_gt = _pooled_match(d_c, g_c, kind, wrap_width, width, height)
        ap_t = [average_precision(pr_curve(match, n_gt, k)) for k in range(len(IOU_THRESHOLDS))]
        curve = pr_curve(match, n_gt, 0)
        p, r, conf = best_f1(curve)
        per_class[c] = {
            "precision": p, "recall": r, "confidence": conf, "ap50": ap_t[0],
            "map50_95": float(np.mean(ap_t)), "n_gt": n_gt,
        }
        aps.append(ap_t)
        prs.append((p, r, conf))
        if len(classes) == 1:
            curve50 = curve

    ap_per_threshold = [float(v) for v in np.mean(aps, axis=0)]
    n_gt_total = sum(v["n_gt"] for v in per_class.values())
    return EvalReport(
        branch=kind,
        precision=float(np.mean([p for p, _, _ in prs])),
        recall=float(np.mean([r for _, r, _ in prs])),
        ap50=ap_per_threshold[0],
        map50_95=float(np.mean(ap_per_threshold)),
        ap_per_threshold=ap_per_threshold,
        confidence=float(np.mean([c for _, _, c in prs])),
        n_gt=n_gt_total,
        n_det=n_det,
        per_class=per_class,
        curve=curve50,
    )


def format_report_table(reports) -> str:
    header = f"{'Branch':<6} | {'Precision':>9} | {'Recall':>6} | {'mAP @0.5':>8} | {'mAP@0.5-0.95':>12}"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.branch:<6} | {r.precision:>9.3f} | {r.recall:>6.3f} | {r.ap50:>8.3f} | {r.map50_95:>12.3f}"
        )
    return "\n".join(lines)


def reports_to_json(reports) -> str:
    return json.dumps({r.branch: r.to_dict() for r in reports}, indent=2, sort_keys=True)
