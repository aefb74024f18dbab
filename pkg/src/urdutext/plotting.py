"""Figures for the detection debug trace and the evaluation report."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

STAGE_COLORS = {
    "mser": "tab:gray",
    "geometric": "tab:orange",
    "patch_svm": "tab:blue",
    "linking": "tab:purple",
    "line_svm": "tab:green",
}


def report_style():
    plt.rcParams.update({
        "font.size": 9,
        "axes.titlesize": 10,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "savefig.dpi": 120,
        "savefig.bbox": "tight",
    })


def _draw_boxes(ax, boxes, color, lw=1.0):
    for b in boxes:
        ax.add_patch(Rectangle((b.x - 0.5, b.y - 0.5), b.w, b.h, fill=False, edgecolor=color, linewidth=lw))


def stage_overlay(img, trace: dict, path) -> None:
    """One panel per pipeline stage with that stage's surviving boxes."""
    report_style()
    stages = list(trace)
    fig, axes = plt.subplots(1, len(stages), figsize=(3.2 * len(stages), 3.2 * img.height / img.width + 0.6))
    if len(stages) == 1:
        axes = [axes]
    shown = img.data if img.channels == 3 else img.data[:, :, 0]
    for ax, stage in zip(axes, stages):
        ax.imshow(shown, cmap=None if img.channels == 3 else "gray", vmin=0, vmax=255)
        _draw_boxes(ax, trace[stage], STAGE_COLORS.get(stage, "red"))
        ax.set_title(f"{stage} ({len(trace[stage])})")
        ax.set_axis_off()
    fig.savefig(path)
    plt.close(fig)


def eval_figure(report, path, gt_boxes=None) -> None:
    """Per-image TP/FP/FN bars plus the aggregate precision/recall/F."""
    report_style()
    ids = list(report.per_image)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(max(6.0, 0.25 * len(ids) + 3), 3.0),
                                   gridspec_kw={"width_ratios": [max(3, len(ids) // 4), 1]})
    x = range(len(ids))
    tp = [report.per_image[i].tp for i in ids]
    fp = [report.per_image[i].fp for i in ids]
    fn = [report.per_image[i].fn for i in ids]
    ax0.bar(x, tp, color="tab:green", label="TP")
    ax0.bar(x, fp, bottom=tp, color="tab:red", label="FP")
    ax0.bar(x, fn, bottom=[a + b for a, b in zip(tp, fp)], color="tab:gray", label="FN")
    ax0.set_xticks(list(x))
    ax0.set_xticklabels(ids, rotation=90, fontsize=6)
    ax0.set_ylabel("boxes")
    ax0.legend(frameon=False, ncol=3, fontsize=7)
    vals = [report.precision, report.recall, report.f_measure]
    ax1.bar(["P", "R", "F"], vals, color=["tab:blue", "tab:orange", "tab:purple"])
    ax1.set_ylim(0, 1)
    for k, v in enumerate(vals):
        ax1.text(k, v + 0.02, f"{v:.3f}", ha="center", fontsize=7)
    fig.savefig(path)
    plt.close(fig)
