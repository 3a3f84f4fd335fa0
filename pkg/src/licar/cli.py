"""``licar`` command-line entry point.

Exit codes: 0 success, 64 usage, 65 bad input data, 74 I/O, 78 config.
Failures print one JSON object ``{"error": category, "message": ...}`` on
stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import annotations as ann
from .config import dumps, load_config
from .detections import FileReplayDetector, read_detections
from .errors import LicarError
from .evaluation import evaluate, format_report_table, reports_to_json
from .lidar_frame import load_frame, load_points, save_frame
from .pipeline import bench, list_frame_dirs, run_tracking
from .sri_projection import compose_pseudo_rgb, pointcloud_to_sri
from .tracker.tracker import mot_csv_text

EXIT_CODES = {"usage": 64, "data": 65, "io": 74, "config": 78}

log = logging.getLogger("licar")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ratios(text):
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratios must be integers, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios need three comma-separated values")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="licar", description="Pseudo-RGB LiDAR image pipeline for car instances.")
    p.add_argument("--config", help="pipeline config file (default: $LICAR_CONFIG or built-in defaults)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("convert", help="scatter a point CSV into a spherical range image frame")
    s.add_argument("--points", required=True)
    s.add_argument("--out", required=True, help="frame directory to write")

    s = sub.add_parser("compose", help="write the pseudo-RGB PNG of a frame")
    s.add_argument("--frame", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("split", help="deterministic train/val/test split")
    s.add_argument("--ids", required=True, help="text file, one frame id per line")
    s.add_argument("--ratios", type=_ratios, default=(85, 10, 5))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="manifest JSON (default: stdout)")
    s.add_argument("--labels", help="LabelMe directory (<id>.json) for the dataset table")

    s = sub.add_parser("labels", help="convert LabelMe JSON <-> YOLO-seg text")
    s.add_argument("--input", required=True, help="file or directory")
    s.add_argument("--to", choices=("yolo", "labelme"), required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--width", type=int)
    s.add_argument("--height", type=int)

    s = sub.add_parser("track", help="track replayed detections, write MOT CSV")
    s.add_argument("--detections", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--frames", help="directory of frame directories (required for --overlay)")
    s.add_argument("--overlay", help="directory for annotated pseudo-RGB PNGs")

    s = sub.add_parser("eval", help="score detections against ground truth")
    s.add_argument("--detections", required=True)
    s.add_argument("--gt", required=True, help="detections-format JSONL or a LabelMe directory")
    s.add_argument("--branch", choices=("box", "mask", "both"), default="both")
    s.add_argument("--wrap", action="store_true", help="treat the image as a 360 degree cylinder")
    s.add_argument("--out", help="report JSON path")
    s.add_argument("--figures", help="directory for PR and AP figures")

    s = sub.add_parser("bench", help="time preprocess+inference+postprocess per frame")
    s.add_argument("--frames", required=True)
    s.add_argument("--detections", required=True)
    s.add_argument("--warmup", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--out", help="timing JSON path")
    s.add_argument("--figures", help="directory for the timing figure")

    sub.add_parser("config", help="print the effective configuration")
    return p


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_convert(args, cfg):
    frame, dropped = pointcloud_to_sri(load_points(args.points), cfg.projection)
    save_frame(frame, args.out, cfg.range_scale_mm)
    holes = int((~frame.valid).sum())
    print(json.dumps({"out": str(args.out), "width": frame.width, "height": frame.height,
                      "dropped": dropped, "holes": holes}))


def cmd_compose(args, cfg):
    frame = load_frame(args.frame, cfg.range_scale_mm)
    compose_pseudo_rgb(frame, cfg.normalization).save(args.out)


def cmd_split(args, cfg):
    ids = [line.strip() for line in Path(args.ids).read_text().splitlines() if line.strip()]
    split = ann.split_dataset(ids, args.ratios, args.seed)
    if args.out:
        _write(args.out, split.to_json() + "\n")
    else:
        print(split.to_json())
    if args.labels:
        annos = {i: ann.parse_labelme(Path(args.labels) / f"{i}.json")[0] for i in ids}
        # keep stdout a valid manifest when no --out is given
        print(ann.format_dataset_stats(ann.dataset_stats(split, annos)), file=sys.stdout if args.out else sys.stderr)


def _inputs(path, suffix):
    path = Path(path)
    return sorted(path.glob(f"*{suffix}")) if path.is_dir() else [path]


def cmd_labels(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.to == "yolo":
        for f in _inputs(args.input, ".json"):
            annos, width, height = ann.parse_labelme(f)
            (out / f"{f.stem}.txt").write_text(ann.to_yolo_seg(annos, width, height))
    else:
        width = args.width or cfg.projection.width
        height = args.height or cfg.projection.height
        for f in _inputs(args.input, ".txt"):
            annos = ann.parse_yolo_seg(f.read_text(), width, height)
            doc = ann.to_labelme(annos, width, height, image_path=f"{f.stem}.png")
            (out / f"{f.stem}.json").write_text(json.dumps(doc, indent=2))


def cmd_track(args, cfg):
    detector = FileReplayDetector.from_file(args.detections)
    if args.frames:
        frame_ids = [p.name for p in list_frame_dirs(args.frames)]
    else:
        if args.overlay:
            raise UsageError("--overlay needs --frames")
        frame_ids = list(detector.detections)
    rows = run_tracking(frame_ids, detector, cfg, args.frames, args.overlay)
    _write(args.out, mot_csv_text(rows))


def _load_gt(path):
    path = Path(path)
    if path.is_dir():
        gts = {}
        for f in sorted(path.glob("*.json")):
            gts[f.stem] = ann.parse_labelme(f)[0]
        return gts
    return read_detections(path)


def cmd_eval(args, cfg):
    dets = read_detections(args.detections)
    gts = _load_gt(args.gt)
    branches = ("box", "mask") if args.branch == "both" else (args.branch,)
    wrap = cfg.projection.width if args.wrap else None
    reports = [
        evaluate(dets, gts, b, wrap_width=wrap, width=cfg.projection.width, height=cfg.projection.height)
        for b in branches
    ]
    print(format_report_table(reports))
    if args.out:
        _write(args.out, reports_to_json(reports) + "\n")
    if args.figures:
        from .plotting import plot_ap_by_threshold, plot_pr_curves

        plot_pr_curves(reports, Path(args.figures) / "pr_curve.png")
        plot_ap_by_threshold(reports, Path(args.figures) / "ap_by_threshold.png")


def cmd_bench(args, cfg):
    detector = FileReplayDetector.from_file(args.detections)
    report = bench(list_frame_dirs(args.frames), detector, cfg, args.warmup, args.reps)
    print(f"Speed (ms): {report.decomposition()}  total median {report.median('total'):.1f}")
    if args.out:
        _write(args.out, report.to_json() + "\n")
    if args.figures:
        from .plotting import plot_timing

        plot_timing(report, Path(args.figures) / "timing.png")


def cmd_config(args, cfg):
    sys.stdout.write(dumps(cfg))


COMMANDS = {
    "convert": cmd_convert,
    "compose": cmd_compose,
    "split": cmd_split,
    "labels": cmd_labels,
    "track": cmd_track,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "config": cmd_config,
}


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES[category]


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        return _fail("usage", str(exc))
    except LicarError as exc:
        return _fail(exc.category, str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
