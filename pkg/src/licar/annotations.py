"""Instance annotations: LabelMe JSON, YOLO-seg text and dataset splits.

LabelMe shapes that share a ``group_id`` describe one car cut into pieces
(by occlusion or by the 360 degree seam) and are merged into a single
instance.  In YOLO-seg text such an instance is written on one line: each
polygon is closed by repeating its first vertex, then the line walks back
through the first vertices of the earlier polygons.  The bridge edges are
traversed twice, so they add no area.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadRatios, DegeneratePolygon, ParseError, UnknownId

log = logging.getLogger(__name__)

DEFAULT_CLASSES = {"car": 0}
UNKNOWN_CLASS = -1


@dataclass(frozen=True, eq=False)
class InstanceAnnotation:
    label: str
    class_id: int
    polygons: tuple  # of (N, 2) float arrays, pixel coordinates

    def __post_init__(self):
        polys = tuple(np.asarray(p, dtype=np.float64).reshape(-1, 2) for p in self.polygons)
        if not polys:
            raise DegeneratePolygon("an instance needs at least one polygon")
        for p in polys:
            if len(p) < 3:
                raise DegeneratePolygon(f"polygon with {len(p)} vertices; need at least 3")
        object.__setattr__(self, "polygons", polys)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        pts = np.concatenate(self.polygons)
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        return float(x0), float(y0), float(x1 - x0), float(y1 - y0)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    test: tuple

    def to_json(self) -> str:
        return json.dumps({"train": list(self.train), "val": list(self.val), "test": list(self.test)}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DatasetSplit":
        data = json.loads(text)
        return cls(tuple(data["train"]), tuple(data["val"]), tuple(data["test"]))


def _clamp(points, width, height) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return np.column_stack([np.clip(pts[:, 0], 0, width), np.clip(pts[:, 1], 0, height)])


def parse_labelme(path, class_map=None) -> tuple[list[InstanceAnnotation], int, int]:
    """Parse a LabelMe file into instances plus ``(width, height)``.

    Labels missing from ``class_map`` keep their name with class id -1.
    """
    class_map = DEFAULT_CLASSES if class_map is None else class_map
    try:
        data = json.loads(Path(path).read_text())
        width, height = int(data["imageWidth"]), int(data["imageHeight"])
        shapes = data["shapes"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return labelme_shapes_to_instances(shapes, width, height, class_map), width, height


def labelme_shapes_to_instances(shapes, width, height, class_map=None) -> list[InstanceAnnotation]:
    class_map = DEFAULT_CLASSES if class_map is None else class_map
    groups: dict = {}
    order = []
    for i, shape in enumerate(shapes):
        try:
            label = str(shape["label"])
            pts = shape["points"]
            gid = shape.get("group_id")
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"shape {i}: {exc}") from None
        if len(pts) < 3:
            raise DegeneratePolygon(f"shape {i} ({label}) has {len(pts)} points")
        key = ("single", i) if gid is None else ("group", label, gid)
        if key not in groups:
            groups[key] = (label, [])
            order.append(key)
        groups[key][1].append(_clamp(pts, width, height))
    return [
        InstanceAnnotation(label, class_map.get(label, UNKNOWN_CLASS), tuple(groups[k][1]))
        for k in order
    ]


def to_labelme(annos, width, height, image_path="") -> dict:
    shapes = []
    next_group = 1
    for a in annos:
        gid = None
        if len(a.polygons) > 1:
            gid, next_group = next_group, next_group + 1
        for poly in a.polygons:
            shapes.append(
                {
                    "label": a.label,
                    "points": poly.tolist(),
                    "group_id": gid,
                    "shape_type": "polygon",
                    "flags": {},
                }
            )
    return {
        "version": "5.2.1",
        "flags": {},
        "shapes": shapes,
        "imagePath": image_path,
        "imageData": None,
        "imageHeight": height,
        "imageWidth": width,
    }


def bridge_polygons(polygons) -> list:
    """Chain several polygons into one closed vertex sequence."""
    if len(polygons) == 1:
        return list(polygons[0])
    seq = []
    for poly in polygons:
        seq.extend(poly)
        seq.append(poly[0])
    seq.extend(p[0] for p in reversed(polygons[:-1]))
    return seq


def split_bridged(seq) -> list[np.ndarray]:
    """Inverse of :func:`bridge_polygons` on exactly reproduced vertices."""
    seq = [tuple(v) for v in seq]
    polys, starts = [], set()
    i = 0
    while i < len(seq):
        start = seq[i]
        if polys and start in starts:
            break  # return path
        try:
            end = seq.index(start, i + 1)
        except ValueError:
            polys.append(seq[i:])
            break
        polys.append(seq[i:end])
        starts.add(start)
        i = end + 1
    return [np.asarray(p, dtype=np.float64) for p in polys]


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def to_yolo_seg(annos, width, height) -> str:
    if width <= 0 or height <= 0:
        raise ValueError("image size must be positive")
    lines = []
    for a in annos:
        if a.class_id < 0:
            log.warning("skipping instance with unmapped label %r", a.label)
            continue
        # quantise first so that repeated bridge vertices stay byte-identical
        polys = [[(_fmt(x / width), _fmt(y / height)) for x, y in p] for p in a.polygons]
        seq = bridge_polygons(polys)
        lines.append(" ".join([str(a.class_id)] + [c for xy in seq for c in xy]))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_yolo_seg(text, width, height, names=None) -> list[InstanceAnnotation]:
    """Parse YOLO-seg lines; ``names`` maps class id to label (default ``car`` for 0)."""
    names = {v: k for k, v in DEFAULT_CLASSES.items()} if names is None else names
    annos = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            class_id = int(tokens[0])
            coords = [float(t) for t in tokens[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if len(coords) % 2:
            raise ParseError("odd number of coordinates", line=lineno)
        if any(not (0.0 <= c <= 1.0) or math.isnan(c) for c in coords):
            raise ParseError("normalized coordinate outside [0, 1]", line=lineno)
        pairs = list(zip(coords[0::2], coords[1::2]))
        polys = split_bridged(pairs)
        if any(len(p) < 3 for p in polys) or not polys:
            raise ParseError("polygon with fewer than 3 vertices", line=lineno)
        scaled = tuple(p * np.array([width, height], dtype=np.float64) for p in polys)
        annos.append(InstanceAnnotation(names.get(class_id, str(class_id)), class_id, scaled))
    return annos


class Xoshiro256StarStar:
    """xoshiro256** seeded through splitmix64, so splits reproduce anywhere."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        s = seed & self.MASK
        self.state = []
        for _ in range(4):
            s = (s + 0x9E3779B97F4A7C15) & self.MASK
            z = s
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
            self.state.append(z ^ (z >> 31))

    @staticmethod
    def _rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & Xoshiro256StarStar.MASK

    def next_u64(self) -> int:
        s = self.state
        result = (self._rotl((s[1] * 5) & self.MASK, 7) * 9) & self.MASK
        t = (s[1] << 17) & self.MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = self._rotl(s[3], 45)
        return result

    def below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection."""
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def split_dataset(ids, ratios=(85, 10, 5), seed: int = 0) -> DatasetSplit:
    ratios = tuple(ratios)
    if len(ratios) != 3 or any(int(r) != r or r < 0 for r in ratios) or sum(ratios) != 100:
        raise BadRatios(f"ratios must be three non-negative integers summing to 100, got {ratios}")
    items = list(ids)
    if len(set(items)) != len(items):
        raise ValueError("duplicate ids")
    Xoshiro256StarStar(seed).shuffle(items)
    n = len(items)
    n_val = n * ratios[1] // 100
    n_test = n * ratios[2] // 100
    n_train = n - n_val - n_test
    return DatasetSplit(
        tuple(items[:n_train]),
        tuple(items[n_train : n_train + n_val]),
        tuple(items[n_train + n_val :]),
    )


def dataset_stats(split: DatasetSplit, annos: dict) -> list[tuple[str, int, int]]:
    rows = []
    for name in ("train", "val", "test"):
        ids = getattr(split, name)
        missing = [i for i in ids if i not in annos]
        if missing:
            raise UnknownId(f"no annotations for ids {missing[:5]}")
        rows.append((name, len(ids), sum(len(annos[i]) for i in ids)))
    return rows


def format_dataset_stats(rows) -> str:
    titles = {"train": "Train", "val": "Validation", "test": "Test"}
    out = [f"{'Set':<10} | {'Images':>6} | {'Instances':>9}"]
    for name, images, instances in rows:
        out.append(f"{titles.get(name, name):<10} | {images:>6} | {instances:>9}")
    return "\n".join(out)
