"""Figures written next to the ``eval`` and ``bench`` reports."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import IOU_THRESHOLDS  # noqa: E402
from .pipeline import STAGES  # noqa: E402

BRANCH_COLORS = {"box": "tab:blue", "mask": "tab:orange"}
STAGE_COLORS = {"preprocess": "tab:green", "inference": "tab:purple", "postprocess": "tab:red"}
FRAME_BUDGET_MS = (1000.0 / 30, 1000.0 / 15)


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_pr_curves(reports, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    for r in reports:
        if not r.curve:
            continue
        prec = [c[0] for c in r.curve]
        rec = [c[1] for c in r.curve]
        ax.step(rec, prec, where="post", color=BRANCH_COLORS.get(r.branch), label=f"{r.branch}  AP50={r.ap50:.3f}")
        ax.plot([r.recall], [r.precision], "o", color=BRANCH_COLORS.get(r.branch))
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_title("Precision-recall at IoU 0.5")
    ax.legend(loc="lower left", fontsize=8)
    return _finish(fig, path)


def plot_ap_by_threshold(reports, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for r in reports:
        ax.plot(IOU_THRESHOLDS, r.ap_per_threshold, "o-", color=BRANCH_COLORS.get(r.branch), label=r.branch)
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("AP")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_timing(report, path) -> Path:
    """Stacked per-frame stage times against the 30 and 15 FPS budgets."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    frames = range(len(report.preprocess))
    bottom = None
    for stage in STAGES:
        values = getattr(report, stage)
        ax.bar(frames, values, bottom=bottom, width=1.0, color=STAGE_COLORS[stage], label=stage)
        bottom = values if bottom is None else bottom + values
    for budget, style in zip(FRAME_BUDGET_MS, ("--", ":")):
        ax.axhline(budget, color="k", linestyle=style, linewidth=0.8)
    ax.set_xlabel("Measured frame")
    ax.set_ylabel("Time (ms)")
    ax.set_title(f"Median {report.decomposition()} ms")
    ax.legend(fontsize=8, loc="upper right")
    return _finish(fig, path)
