"""Report rendering: matplotlib figures written next to the CSV/JSONL output."""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import tensor_to_image


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


def save_loss_curves(rows, path):
    """Generator and discriminator totals per iteration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    iters = [r["iter"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].plot(iters, [r["g_xy_total"] for r in rows], label="G summer->winter", lw=0.8)
    axes[0].plot(iters, [r["g_yx_total"] for r in rows], label="G winter->summer", lw=0.8)
    axes[0].set_title("generator objectives")
    axes[1].plot(iters, [r["d_x_total"] for r in rows], label="D summer", lw=0.8)
    axes[1].plot(iters, [r["d_y_total"] for r in rows], label="D winter", lw=0.8)
    axes[1].set_title("discriminator objectives")
    for ax in axes:
        ax.set_xlabel("iteration")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _imshow(ax, img, title):
    if img.ndim == 2:
        ax.imshow(img, cmap="gray", vmin=0, vmax=1)
    else:
        ax.imshow(img)
    ax.set_title(title, fontsize=9)
    ax.set_axis_off()


def save_change_panel(t1, t2, predicted, truth, path):
    """t1 / t2 / predicted map / ground truth side by side."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    panels = [(tensor_to_image(t1), "t1"), (tensor_to_image(t2), "t2"),
              (np.asarray(predicted), "predicted")]
    if truth is not None:
        panels.append((np.asarray(truth), "truth"))
    fig, axes = plt.subplots(1, len(panels), figsize=(2.4 * len(panels), 2.6))
    for ax, (img, title) in zip(np.atleast_1d(axes), panels):
        _imshow(ax, img, title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_translation_grid(inputs, outputs, path, max_n: int = 4):
    """Input row above translated row for up to max_n images."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = min(len(inputs), max_n)
    fig, axes = plt.subplots(2, n, figsize=(2.4 * n, 5.0), squeeze=False)
    for i in range(n):
        _imshow(axes[0][i], tensor_to_image(inputs[i]), "input")
        _imshow(axes[1][i], tensor_to_image(outputs[i]), "translated")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_metric_bars(record, path):
    """Bar chart of IS / FID / KID(x100) for one evaluation record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = ["IS", "FID", "KID(x100)"]
    values = [record["is"], record["fid"], record["kid"] * 100.0]
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    ax.bar(names, values, color=["#4c72b0", "#dd8452", "#55a868"])
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.3g}", ha="center", va="bottom", fontsize=8)
    ax.set_title("translation metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
