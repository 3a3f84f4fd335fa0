import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from licar.annotations import InstanceAnnotation
from licar.detections import Detection
from licar.evaluation import (
    IOU_THRESHOLDS,
    average_precision,
    best_f1,
    evaluate,
    format_report_table,
    greedy_match,
    match_predictions,
    pr_curve,
    reports_to_json,
)
from licar.raster import mask_iou, rasterize


def inside(poly, x, y):
    """Even-odd ray casting to the right of (x, y)."""
    hit = False
    n = len(poly)
    for i in range(n):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % n]
        if (y0 <= y < y1) or (y1 <= y < y0):
            if x0 + (y - y0) / (y1 - y0) * (x1 - x0) > x:
                hit = not hit
    return hit


def reference_mask(polys, width, height, wrap=False):
    out = np.zeros((height, width), bool)
    for poly in polys:
        for r in range(height):
            for c in range(-width if wrap else 0, 2 * width if wrap else width):
                if inside(poly, c + 0.5, r + 0.5):
                    out[r, c % width] = True
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 9))
def test_rasterize_matches_point_in_polygon(seed, k):
    rng = np.random.default_rng(seed)
    poly = rng.uniform([-5, -3], [45, 23], (k, 2))  # may self-intersect
    np.testing.assert_array_equal(rasterize([poly], 40, 20), reference_mask([poly], 40, 20))


def test_rasterize_wraps_columns():
    poly = np.array([[35.2, 2.1], [44.7, 2.1], [44.7, 9.3], [35.2, 9.3]])
    got = rasterize([poly], 40, 12, wrap=True)
    np.testing.assert_array_equal(got, reference_mask([poly], 40, 12, wrap=True))
    assert got[:, :5].any() and got[:, 35:].any()


def test_mask_iou_examples():
    sq = [np.array([[0, 0], [10, 0], [10, 10], [0, 10]])]
    shifted = [np.array([[5, 0], [15, 0], [15, 10], [5, 10]])]
    far = [np.array([[30, 0], [40, 0], [40, 10], [30, 10]])]
    assert mask_iou(sq, sq, 64, 16) == 1.0
    assert mask_iou(sq, far, 64, 16) == 0.0
    assert mask_iou(sq, shifted, 64, 16) == pytest.approx(1 / 3)


def reference_greedy(ious, scores, thr):
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    taken, tp = set(), []
    for d in order:
        best, best_g = -1.0, None
        for g in range(len(ious[d])):
            if g not in taken and ious[d][g] > best:
                best, best_g = ious[d][g], g
        if best_g is not None and best >= thr:
            taken.add(best_g)
            tp.append(True)
        else:
            tp.append(False)
    return tp


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 8), st.integers(0, 8))
def test_greedy_match_reference(seed, n_det, n_gt):
    rng = np.random.default_rng(seed)
    ious = rng.random((n_det, n_gt))
    scores = rng.random(n_det)
    m = greedy_match(ious, scores)
    for k, thr in enumerate(IOU_THRESHOLDS):
        assert m.tp[:, k].tolist() == reference_greedy(ious.tolist(), scores.tolist(), thr)


def test_pr_curve_recount(rng):
    ious = rng.random((30, 12))
    scores = rng.choice([0.2, 0.4, 0.6, 0.8, 0.9], 30)
    m = greedy_match(ious, scores, (0.5,))
    curve = pr_curve(m, 12)
    assert [c[2] for c in curve] == sorted(set(scores.tolist()), reverse=True)
    tp_by_det = dict(zip(m.order.tolist(), m.tp[:, 0].tolist()))
    for p, r, conf in curve:
        kept = [i for i in range(30) if scores[i] >= conf]
        tp = sum(tp_by_det[i] for i in kept)
        assert p == pytest.approx(tp / len(kept), abs=1e-12)
        assert r == pytest.approx(tp / 12, abs=1e-12)


def reference_ap101(curve):
    total = 0.0
    for i in range(101):
        r = i / 100
        total += max([p for p, rec, _ in curve if rec >= r] or [0.0])
    return total / 101


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ap_matches_101_point_reference(seed):
    rng = np.random.default_rng(seed)
    n_gt = int(rng.integers(1, 20))
    ious = rng.random((int(rng.integers(0, 30)), n_gt)) * 1.2
    scores = np.round(rng.random(len(ious)), 2)
    curve = pr_curve(greedy_match(ious, scores, (0.5,)), n_gt)
    assert average_precision(curve) == pytest.approx(reference_ap101(curve), abs=1e-9)


def test_ap_close_to_area_under_envelope():
    # dense curve: 1000 ranked detections, precision decaying with rank
    n_gt = 500
    tp = np.array([i % 3 != 2 if i < 600 else i % 5 == 0 for i in range(1000)])
    ious = np.zeros((1000, n_gt))
    g = 0
    for i in np.flatnonzero(tp)[:n_gt]:
        ious[i, g] = 1.0
        g += 1
    scores = np.linspace(1, 0.001, 1000)
    curve = pr_curve(greedy_match(ious, scores, (0.5,)), n_gt)
    prec = np.array([c[0] for c in curve])
    rec = np.array([c[1] for c in curve])
    env = np.maximum.accumulate(prec[::-1])[::-1]
    area = float(np.sum(np.diff(np.concatenate([[0.0], rec])) * env))
    assert average_precision(curve) == pytest.approx(area, abs=1e-2)


def test_best_f1_takes_first_maximum():
    curve = [(1.0, 0.5, 0.9), (0.5, 1.0, 0.5), (0.2, 0.2, 0.1)]
    assert best_f1(curve) == (1.0, 0.5, 0.9)


def car(box, score=None, polygons=None, frame="f"):
    if score is None:
        x, y, w, h = box
        polys = polygons or [[[x, y], [x + w, y], [x + w, y + h], [x, y + h]]]
        return InstanceAnnotation("car", 0, polys)
    return Detection(frame, 0, score, box, polygons)


def test_perfect_detections_score_one():
    gts = {f"f{i}": [car((10 + 50 * k, 20, 30, 12)) for k in range(3)] for i in range(4)}
    dets = {f: [car(g.bbox, 0.9, g.polygons, f) for g in gs] for f, gs in gts.items()}
    for kind in ("box", "mask"):
        r = evaluate(dets, gts, kind)
        assert (r.precision, r.recall, r.ap50, r.map50_95) == (1.0, 1.0, 1.0, 1.0)


def test_single_partial_overlap():
    # IoU 0.57 passes the 0.50 and 0.55 thresholds only
    w = 100
    shift = w * (1 - 0.57) / (1 + 0.57)
    gts = {"f": [car((0, 0, w, 10))]}
    dets = {"f": [car((shift, 0, w, 10), 0.8)]}
    m = match_predictions(dets["f"], gts["f"], IOU_THRESHOLDS)
    assert m.tp[0].tolist() == [True, True] + [False] * 8
    r = evaluate(dets, gts, "box")
    assert r.ap50 == 1.0 and r.map50_95 == pytest.approx(0.2, abs=1e-12)


def test_missing_and_false_positive():
    gts = {"a": [car((0, 0, 10, 10)), car((50, 0, 10, 10))]}
    dets = {"a": [car((0, 0, 10, 10), 0.9), car((100, 0, 10, 10), 0.8)]}
    r = evaluate(dets, gts, "box")
    assert r.precision == 1.0 and r.recall == 0.5
    assert r.ap50 == pytest.approx(51 / 101)


def test_seam_split_instance_matches_with_wrap():
    w = 256
    left = [[0, 10], [12, 10], [12, 20], [0, 20]]
    right = [[w - 8, 10], [w, 10], [w, 20], [w - 8, 20]]
    gts = {"f": [InstanceAnnotation("car", 0, [left, right])]}
    dets = {"f": [Detection("f", 0, 0.9, (w - 8, 10, 20, 10), ([[w - 8, 10], [w + 12, 10], [w + 12, 20], [w - 8, 20]],))]}
    assert evaluate(dets, gts, "mask", wrap_width=w, height=32).ap50 == 1.0
    assert evaluate(dets, gts, "mask", width=w, height=32).ap50 == 0.0


def test_no_ground_truth_warns():
    r = evaluate({"f": [car((0, 0, 5, 5), 0.5)]}, {}, "box")
    assert r.warnings and r.recall == 0.0 and r.n_det == 1


def test_report_outputs():
    gts = {"f": [car((0, 0, 10, 10))]}
    reports = [evaluate({"f": [car((0, 0, 10, 10), 0.7)]}, gts, b) for b in ("box", "mask")]
    table = format_report_table(reports).splitlines()
    assert [c.strip() for c in table[0].split("|")] == ["Branch", "Precision", "Recall", "mAP @0.5", "mAP@0.5-0.95"]
    assert table[2].startswith("box") and table[3].startswith("mask")
    assert '"ap50": 1.0' in reports_to_json(reports)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metrics_are_bounded(seed):
    rng = np.random.default_rng(seed)
    gts = {f"f{i}": [car(tuple(rng.uniform([0, 0, 5, 5], [200, 50, 40, 20]))) for _ in range(rng.integers(0, 4))] for i in range(3)}
    dets = {f: [car(tuple(rng.uniform([0, 0, 5, 5], [200, 50, 40, 20])), float(rng.random()), frame=f) for _ in range(rng.integers(0, 5))] for f in gts}
    r = evaluate(dets, gts, "box", width=256, height=64)
    for v in (r.precision, r.recall, r.ap50, r.map50_95, *r.ap_per_threshold):
        assert 0.0 <= v <= 1.0 and not math.isnan(v)
    assert r.map50_95 <= r.ap50 + 1e-12


def test_rectangle_masks_agree_with_boxes(rng):
    # integer-aligned rectangles cover whole pixels, so both branches agree exactly
    gts, dets = {}, {}
    for f in range(5):
        fid = str(f)
        gts[fid] = [car(tuple(float(v) for v in rng.integers([0, 0, 10, 5], [200, 40, 50, 20]))) for _ in range(4)]
        dets[fid] = [
            car(tuple(float(v) for v in (np.array(g.bbox) + rng.integers(-4, 5, 4) * [1, 1, 0, 0])), float(rng.random()), frame=fid)
            for g in gts[fid]
        ]
    box = evaluate(dets, gts, "box", width=256, height=64)
    mask = evaluate(dets, gts, "mask", width=256, height=64)
    assert box.ap_per_threshold == pytest.approx(mask.ap_per_threshold, abs=1e-12)
