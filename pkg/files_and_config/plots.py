"""
plots.py — SVG figures for a fairness report: per-subgroup bars and KDE curves.

Rendering uses the Agg backend with a fixed SVG hash salt and no date stamp
so the same inputs produce the same file.
"""

import logging
from pathlib import Path
from typing import Mapping

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from fairness_eval.kde import KDECurve  # noqa: E402
from fairness_eval.report import FairnessReport  # noqa: E402

logger = logging.getLogger(__name__)

_STYLE = {"svg.hashsalt": "cmac-fairness", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path: str | Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Wrote plot {path}")
    return Path(path)


def plot_subgroup_bars(report: FairnessReport, path: str | Path, metrics=("tpr", "deodds")) -> Path:
    labels = list(report.per_subgroup)
    x = np.arange(len(labels))
    width = 0.8 / len(metrics)
    with mpl.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels)), 3.2))
        for k, metric in enumerate(metrics):
            values = [report.per_subgroup[name].get(metric) for name in labels]
            heights = [np.nan if v is None else v for v in values]
            ax.bar(x + (k - (len(metrics) - 1) / 2) * width, heights, width, label=metric.upper())
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=30, ha="right")
        ax.set_ylim(0.0, 1.0)
        ax.set_ylabel("rate")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_kde_curves(curves: Mapping[str, KDECurve], path: str | Path, zone: tuple[float, float] | None = None) -> Path:
    with mpl.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        if zone is not None:
            ax.axvspan(zone[0], zone[1], color="0.9", label="uncertainty zone")
        for label, curve in curves.items():
            ax.plot(curve.x, curve.density, linewidth=1.2, label=label)
        ax.set_xlabel("score")
        ax.set_ylabel("density")
        ax.legend(frameon=False, fontsize=7)
        return _save(fig, path)
