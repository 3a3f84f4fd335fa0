from .kalman import KalmanState, kf_init, kf_predict, kf_update
from .matching import assign
from .tracker import Track, Tracker, TrackerConfig, TrackOutput, TrackStatus, tracker_step, write_mot_csv

__all__ = [
    "KalmanState",
    "Track",
    "TrackOutput",
    "TrackStatus",
    "Tracker",
    "TrackerConfig",
    "assign",
    "kf_init",
    "kf_predict",
    "kf_update",
    "tracker_step",
    "write_mot_csv",
]
