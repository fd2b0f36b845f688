"""Matplotlib figures for the report commands (written next to the CSV output)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .stats import DistributionSummary  # noqa: E402

__all__ = ["plot_distribution", "plot_trend", "plot_weights", "savefig"]

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (4.5, 3.2),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "topicsuggest",
}


def savefig(fig, path: str | Path) -> None:
    # No Software/date metadata, so reruns produce identical bytes.
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)


def plot_distribution(summary: DistributionSummary, path: str | Path, xlabel: str, ylabel: str = "count") -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if summary.histogram:
            xs, ys = zip(*summary.histogram)
            ax.loglog(xs, ys, "o", ms=3, color="0.2")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        savefig(fig, path)


def plot_weights(weights: Sequence[float], path: str | Path, threshold: float | None = None) -> None:
    """Edge weights in decreasing order, optionally with the pruning threshold."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ordered = sorted(weights, reverse=True)
        ax.plot(range(len(ordered)), ordered, lw=1, color="0.2")
        if threshold:
            ax.axhline(threshold, ls="--", lw=0.8, color="tab:red", label=f"threshold {threshold:g}")
            ax.legend(frameon=False)
        ax.set_xlabel("edges")
        ax.set_ylabel("weight")
        savefig(fig, path)


def plot_trend(rows: Sequence[Sequence], path_prefix: str | Path) -> list[Path]:
    """Precision and recall against S@i, one line per strategy; returns the written paths."""
    out = []
    by_strategy: dict[str, list[Sequence]] = {}
    for row in rows:
        by_strategy.setdefault(row[1], []).append(row)
    for col, name in ((2, "precision"), (3, "recall")):
        with plt.rc_context(_RC):
            fig, ax = plt.subplots()
            for strategy, pts in sorted(by_strategy.items()):
                pts = sorted(pts)
                ax.plot([p[0] for p in pts], [p[col] for p in pts], marker="o", ms=3, label=strategy)
            ax.set_xlabel("interpreted queries (i of S@i)")
            ax.set_ylabel(name)
            ax.legend(frameon=False)
            path = Path(f"{path_prefix}-{name}.png")
            savefig(fig, path)
            out.append(path)
    return out
