"""Pseudo-RGB LiDAR spherical range images, car-instance labels, tracking and metrics."""

from .annotations import InstanceAnnotation, parse_labelme, parse_yolo_seg, split_dataset, to_yolo_seg
from .boxes import iou
from .detections import Detection, FileReplayDetector, StubDetector, read_detections
from .evaluation import EvalReport, evaluate
from .lidar_frame import LidarFrame, RawPoint, channel_stats, load_frame, load_points, save_frame
from .sri_projection import (
    NormalizationConfig,
    ProjectionConfig,
    PseudoRgbImage,
    compose_pseudo_rgb,
    normalize_channel,
    pointcloud_to_sri,
    project_point,
    unproject_pixel,
)
from .tracker import Tracker, TrackerConfig

__version__ = "0.1.0"
