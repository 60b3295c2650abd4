"""Matplotlib figure emitters for the analysis reports.

Every function renders straight to a file with the Agg backend, so reports
work headless; figures sit next to the CSVs they visualize.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .meta import GamescapeEmbedding, ProfileRow  # noqa: E402
from .nash import PayoffMatrix  # noqa: E402

FIGSIZE = (6.4, 4.8)
DPI = 150


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def payoff_heatmap(payoff: PayoffMatrix, path: str | Path,
                   vlim: float = 0.5) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    im = ax.imshow(payoff.matrix, cmap="coolwarm", vmin=-vlim, vmax=vlim)
    ax.set_xticks(range(payoff.size))
    ax.set_yticks(range(payoff.size))
    if payoff.size <= 30:
        ax.set_xticklabels(payoff.labels, rotation=90, fontsize=6)
        ax.set_yticklabels(payoff.labels, fontsize=6)
    fig.colorbar(im, ax=ax, label="average game score")
    ax.set_title("population payoff matrix")
    return _save(fig, path)


def embedding_plot(embedding: GamescapeEmbedding, labels: Sequence[str],
                   path: str | Path) -> Path:
    pts = embedding.points
    fig, ax = plt.subplots(figsize=FIGSIZE)
    colors = np.where(embedding.inliers, "tab:blue", "tab:red")
    ax.scatter(pts[:, 0], pts[:, 1], c=colors, s=28)
    for lbl, (x, y) in zip(labels, pts):
        ax.annotate(str(lbl), (x, y), fontsize=6, xytext=(2, 2),
                    textcoords="offset points")
    if np.ptp(pts[:, 0]) > 1e-12 and np.any(embedding.regression):
        xs = np.linspace(pts[:, 0].min(), pts[:, 0].max(), 200)
        ax.plot(xs, np.polyval(embedding.regression, xs), "-.",
                color="black", linewidth=1,
                label="second-order fit (outliers removed)")
        ax.legend(fontsize=8)
    ax.set_xlabel("embedding dimension 1")
    ax.set_ylabel("embedding dimension 2")
    ax.set_title(f"gamescape embedding (rotation strength "
                 f"{embedding.rotation_strength:.3g})")
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, path)


def profile_plot(rows: Sequence[ProfileRow], path: str | Path) -> Path:
    mids = [r.elo_midpoint for r in rows]
    sizes = [r.nash_cluster_size for r in rows]
    cycles = [r.rps_cycles_in_band for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.2), sharey=True)
    ax1.barh(mids, sizes, height=0.8 * _bar_height(mids), color="tab:blue")
    ax1.set_xlabel("Nash cluster size")
    ax1.set_ylabel("Elo bin midpoint")
    ax1.set_title("non-transitivity vs rating")
    ax2.barh(mids, cycles, height=0.8 * _bar_height(mids), color="tab:orange")
    ax2.set_xlabel("3-cycles through bin")
    ax2.set_title("cycle membership vs rating")
    return _save(fig, path)


def _bar_height(mids: Sequence[float]) -> float:
    if len(mids) < 2:
        return 1.0
    diffs = np.diff(sorted(mids))
    positive = diffs[diffs > 0]
    return float(positive.min()) if len(positive) else 1.0


def nash_distribution_plot(probs: np.ndarray, labels: Sequence[str],
                           path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.bar(range(len(probs)), probs, color="tab:green")
    ax.set_xticks(range(len(probs)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("Nash probability")
    ax.set_title("max-entropy Nash distribution")
    return _save(fig, path)


def rating_curve_plot(xs: Sequence[float], ys: Sequence[float], path: str | Path,
                      xlabel: str = "games", ylabel: str = "rating") -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(xs, ys, marker="o", markersize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    return _save(fig, path)
