"""Matplotlib report figures written next to the text outputs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import PALETTE, UNLABELED_COLOR  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def scatter_figure(coords, path, labels=None, point_size: float = 2.0):
    coords = np.asarray(coords)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        if labels is None:
            colors = UNLABELED_COLOR
        else:
            ids = getattr(labels, "ids", labels)
            colors = [PALETTE[int(c) % len(PALETTE)] for c in ids]
        ax.scatter(coords[:, 0], coords[:, 1], s=point_size, c=colors, linewidths=0)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(f"{coords.shape[0]:,} points")
        return _save(fig, path)


def objective_figure(trace, path):
    trace = np.asarray(trace)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        x = (np.arange(trace.shape[0]) + 0.5) / trace.shape[0]
        ax.plot(x, trace, color="k", lw=1)
        ax.set_xlabel("fraction of edge samples")
        ax.set_ylabel("mean sampled objective")
        ax.set_xlim(0, 1)
        return _save(fig, path)


def recall_figure(recalls, path):
    recalls = np.asarray(recalls)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 3))
        it = np.arange(recalls.shape[0])
        ax.plot(it, recalls, marker="o", color="firebrick", lw=1)
        ax.set_xticks(it)
        ax.set_xlabel("exploring iterations")
        ax.set_ylabel("mean recall")
        ax.set_ylim(0, 1.02)
        return _save(fig, path)
