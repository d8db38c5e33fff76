"""
report_io.py — Writing and reading report-family documents
(fairness reports, comparisons, experiment summaries) and KDE/bar CSVs.
"""

import io
import logging
from pathlib import Path
from typing import Iterable, Mapping

import pandas as pd

from fairness_eval.kde import KDECurve
from fairness_eval.report import REPORT_KIND, FairnessReport
from shared_utils import canonical_json

logger = logging.getLogger(__name__)

COMPARISON_KIND = "comparison"
SUMMARY_KIND = "experiment_summary"


def write_document(path: str | Path, kind: str, body: dict) -> Path:
    doc = {"schema_version": canonical_json.SCHEMA_VERSION, "kind": kind, **body}
    canonical_json.write(path, doc)
    logger.info(f"Wrote {kind} {path}")
    return Path(path)


def write_report(path: str | Path, report: FairnessReport) -> Path:
    canonical_json.write(path, report.to_dict())
    logger.info(f"Wrote fairness report {path}")
    return Path(path)


def read_report(path: str | Path) -> FairnessReport:
    return FairnessReport.from_dict(canonical_json.read_versioned(path, REPORT_KIND))


def _write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return Path(path)


def write_kde_csv(path: str | Path, curves: Mapping[str, KDECurve]) -> Path:
    """Long format: one (subgroup, x, density) row per grid point."""
    rows = [(label, x, d) for label, curve in curves.items() for x, d in curve.rows()]
    return _write_frame(path, pd.DataFrame(rows, columns=["subgroup", "x", "density"]))


def write_bar_csv(path: str | Path, report: FairnessReport, metrics: Iterable[str] = ("tpr", "fpr", "deodds")) -> Path:
    metrics = list(metrics)
    rows = [[label] + [record.get(m) for m in metrics] for label, record in report.per_subgroup.items()]
    return _write_frame(path, pd.DataFrame(rows, columns=["subgroup", *metrics]))


def write_table(path: str | Path, frame: pd.DataFrame) -> Path:
    return _write_frame(path, frame)
