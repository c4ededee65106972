"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "figure.dpi": 120,
})


def _save(fig, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(rows: Sequence[dict], param: str, path: str | Path):
    """Accuracy, MAE and time against the swept parameter, one panel each."""
    rows = sorted(rows, key=lambda r: r["value"])
    xs = [r["value"] for r in rows]
    fig, axes = plt.subplots(1, 3, figsize=(9, 2.8))
    for ax, key, label in zip(axes, ("accuracy", "mae", "time_s"), ("Accuracy", "MAE", "Time (s)")):
        ax.plot(xs, [r[key] for r in rows], marker="o", lw=1.2)
        ax.set_xlabel(param)
        ax.set_ylabel(label)
        if param == "k" and len(xs) > 2 and max(xs) / max(min(xs), 1) > 10:
            ax.set_xscale("log")
    return _save(fig, path)


def plot_loss_curve(curve: Sequence[dict], path: str | Path):
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot([r["step"] for r in curve], [r["loss"] for r in curve], lw=0.8)
    ax.set_xlabel("optimizer step")
    ax.set_ylabel("BCE")
    ax.set_yscale("log")
    return _save(fig, path)


def plot_predictions(gt: Sequence[float], pred: Sequence[float], path: str | Path):
    """Predicted vs ground-truth GED; points on the diagonal are exact."""
    fig, ax = plt.subplots(figsize=(3.5, 3.5))
    lo = min(min(gt), min(pred))
    hi = max(max(gt), max(pred))
    ax.plot([lo, hi], [lo, hi], color="0.6", lw=0.8, ls="--")
    ax.scatter(gt, pred, s=10, alpha=0.5)
    ax.set_xlabel("ground-truth GED")
    ax.set_ylabel("predicted GED")
    return _save(fig, path)
