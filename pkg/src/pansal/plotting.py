"""Figure rendering for evaluation reports.

Renders the aggregate precision-recall curve and the F-measure-versus-
threshold curve to PNG files next to the delimited outputs. Uses the Agg
backend so runs stay headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import EvalReport


def save_pr_figure(report: EvalReport, path: str | Path) -> None:
    """Plot aggregate precision against recall across all thresholds."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0), dpi=120)
    ax.plot(report.curve_recall, report.curve_precision, lw=1.8)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.set_title(f"PR curve ({len(report.per_image)} images)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_f_figure(report: EvalReport, path: str | Path) -> None:
    """Plot the F-measure of the aggregate curve per binarization threshold."""
    thresholds = [k / 255.0 for k in range(len(report.curve_f))]
    fig, ax = plt.subplots(figsize=(5.0, 4.0), dpi=120)
    ax.plot(thresholds, report.curve_f, lw=1.8)
    best = max(range(len(report.curve_f)), key=lambda k: report.curve_f[k])
    ax.axvline(best / 255.0, color="gray", ls="--", lw=1.0, alpha=0.6)
    ax.set_xlabel("threshold")
    ax.set_ylabel("F-measure")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.set_title(f"F vs threshold (peak at {best / 255.0:.3f})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


__all__ = ["save_pr_figure", "save_f_figure"]
