import io

import numpy as np
import pytest

from licar.detections import Detection
from licar.tracker import Tracker, TrackerConfig, TrackStatus
from licar.tracker.tracker import MOT_HEADER, format_mot_rows, mot_csv_text, write_mot_csv


def det(box, score=0.9):
    return Detection("f", 0, score, box)


def run(tracker, frames):
    return [tracker.step(d) for d in frames]


def test_two_objects_get_ids_one_and_two():
    t = Tracker()
    frames = [[det((10, 10, 20, 10)), det((100, 40, 20, 10))]] * 3
    out = run(t, frames)
    assert out[0] == []  # tracks start tentative
    assert sorted(o.track_id for o in out[1]) == [1, 2]
    assert sorted(o.track_id for o in out[2]) == [1, 2]


def test_lost_track_removed_after_buffer():
    t = Tracker(TrackerConfig(track_buffer=20))
    run(t, [[det((50, 50, 20, 10))]] * 5)
    for miss in range(1, 21):
        t.step([])
        assert [tr.status for tr in t.tracks] == [TrackStatus.LOST]
        assert t.tracks[0].frames_since_update == miss
    t.step([])
    assert t.tracks == [] and t.removed[0].status is TrackStatus.REMOVED


def test_lost_track_recovers_same_id():
    t = Tracker()
    run(t, [[det((50, 50, 20, 10))]] * 5)
    run(t, [[]] * 10)
    (o,) = t.step([det((50, 50, 20, 10))])
    assert o.track_id == 1


def test_score_between_thresholds_spawns_nothing():
    t = Tracker()
    out = run(t, [[det((10, 10, 20, 10), 0.72)]] * 30)
    assert all(o == [] for o in out) and t.tracks == []


def test_low_score_detection_keeps_track_alive():
    t = Tracker()
    run(t, [[det((10, 10, 20, 10))]] * 3)
    out = run(t, [[det((10, 10, 20, 10), 0.3)]] * 30)
    assert all([o.track_id for o in f] == [1] for f in out)
    assert out[-1][0].score == 0.3


def test_tentative_track_dies_on_first_miss():
    t = Tracker()
    t.step([det((10, 10, 20, 10))])
    t.step([])
    assert t.tracks == []
    t.step([det((10, 10, 20, 10))])
    assert t.tracks[0].id == 2


def test_stationary_object_keeps_identity(rng):
    t = Tracker()
    ids = set()
    for _ in range(100):
        box = (300 + rng.normal(0, 1), 60 + rng.normal(0, 1), 40, 12)
        for o in t.step([det(box)]):
            ids.add(o.track_id)
    assert ids == {1}


def test_seam_crossing_keeps_identity():
    t = Tracker(TrackerConfig(wrap_width=2048))
    ids = set()
    for k in range(80):
        x = (2000 + 3 * k) % 2048
        for o in t.step([det((x, 60, 30, 12))]):
            ids.add(o.track_id)
    assert ids == {1}


def test_deterministic_and_unique_ids(rng):
    frames = []
    for _ in range(60):
        n = int(rng.integers(0, 6))
        frames.append(
            [det((float(rng.uniform(0, 500)), float(rng.uniform(0, 100)), 20, 10), float(rng.uniform(0.05, 1))) for _ in range(n)]
        )
    a, b = Tracker(), Tracker()
    out_a, out_b = run(a, frames), run(b, frames)
    assert mot_csv_text(enumerate(out_a, 1)) == mot_csv_text(enumerate(out_b, 1))
    all_ids = [tr.id for tr in a.removed + a.tracks]
    assert len(all_ids) == len(set(all_ids))
    for f in out_a:
        ids = [o.track_id for o in f]
        assert len(ids) == len(set(ids))


def test_match_threshold_semantics():
    assert TrackerConfig().min_iou == pytest.approx(0.2)
    assert TrackerConfig(match_semantics="iou").min_iou == 0.8
    # IoU 1/3 links under the default gate but not under a 0.8 IoU gate
    for cfg, expect in ((TrackerConfig(), [1]), (TrackerConfig(match_semantics="iou"), [])):
        t = Tracker(cfg)
        t.step([det((0, 0, 10, 10))])
        out = t.step([det((5, 0, 10, 10))])
        assert [o.track_id for o in out] == expect


@pytest.mark.parametrize("kwargs", [{"match_thresh": 1.5}, {"track_buffer": 0}, {"match_semantics": "x"}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrackerConfig(**kwargs)


def test_mot_rows_format():
    t = Tracker()
    run(t, [[det((10, 10, 20, 10))]] * 2)
    (o,) = t.step([det((10, 10, 20, 10))])
    (row,) = format_mot_rows(3, [o])
    assert row[:2] == ["3", "1"] and row[-1] == "0.9000"
    buf = io.StringIO()
    write_mot_csv([(3, [o])], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(MOT_HEADER) and lines[1] == ",".join(row)
    assert np.allclose([float(v) for v in row[2:6]], o.bbox, atol=0.005)
