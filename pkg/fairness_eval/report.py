"""
report.py — Assemble the FairnessReport for one scored dataset.

A metric that cannot be computed on the data at hand (a subgroup without
positives, a single-class population) becomes null in the report and an
entry in `flags`; it never aborts the report.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any

from fairness_eval import metrics
from fairness_eval.labeled import LabeledScores, confusion_by_subgroup
from shared_utils.canonical_json import SCHEMA_VERSION
from shared_utils.errors import InputError, NumericalError, SchemaError
from stat_inference.roc import roc_auc

logger = logging.getLogger(__name__)

REPORT_KIND = "fairness_report"


@dataclass(frozen=True)
class EvalSettings:
    threshold: float = 0.5
    zone: tuple[float, float] = metrics.DEFAULT_ZONE
    epsilon: float = 0.5
    alpha: float = 0.5
    gamma: float = 0.4
    kde_bandwidth: str | float = "silverman"

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise InputError(f"threshold must lie in (0, 1), got {self.threshold}")
        lo, hi = self.zone
        if not 0.0 <= lo <= hi <= 1.0:
            raise InputError(f"zone must satisfy 0 <= lo <= hi <= 1, got {self.zone}")
        if self.epsilon < 0 or not 0.0 <= self.alpha <= 1.0 or self.gamma < 0:
            raise InputError("epsilon and gamma must be non-negative and alpha in [0, 1]")

    def echo(self) -> dict:
        return {
            "threshold": self.threshold,
            "zone": list(self.zone),
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "kde_bandwidth": self.kde_bandwidth,
            "deodds_population_rates": "pooled",
            "if_alpha_interpretation": metrics.IF_ALPHA_INTERPRETATION,
        }


@dataclass
class FairnessReport:
    per_subgroup: dict[str, dict[str, Any]]
    aggregate: dict[str, Any]
    flags: list[dict[str, Any]]
    config: dict[str, Any]
    cis: dict[str, dict[str, float]] | None = None
    source: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": REPORT_KIND,
            "per_subgroup": self.per_subgroup,
            "aggregate": self.aggregate,
            "flags": self.flags,
            "config": self.config,
            "source": self.source,
        }
        if self.cis is not None:
            doc["cis"] = self.cis
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "FairnessReport":
        try:
            return cls(
                per_subgroup=doc["per_subgroup"],
                aggregate=doc["aggregate"],
                flags=doc["flags"],
                config=doc["config"],
                cis=doc.get("cis"),
                source=doc.get("source", {}),
            )
        except KeyError as exc:
            raise SchemaError(f"report is missing {exc.args[0]!r}", field=str(exc.args[0])) from exc


# ─── Computation ──────────────────────────────────────────────────────────────

def _guarded(flags: list, metric: str, fn, *args, subgroup: str | None = None):
    try:
        return fn(*args)
    except (InputError, NumericalError) as exc:
        flags.append({"metric": metric, "subgroup": subgroup, "reason": f"{type(exc).__name__}: {exc}"})
        return None


def _flag_excluded(flags: list, metric: str, result, reason: str) -> None:
    if result is None:
        return
    for key in result.excluded:
        flags.append({"metric": metric, "subgroup": key.label, "reason": reason})


def compute(data: LabeledScores, settings: EvalSettings) -> tuple[dict, dict, list]:
    """(per_subgroup, aggregate, flags) with nulls where a metric is undefined."""
    flags: list[dict] = []
    counts = confusion_by_subgroup(data, settings.threshold)

    tpr_gap = _guarded(flags, "delta_tpr", metrics.delta_tpr, counts)
    fpr_gap = _guarded(flags, "delta_fpr", metrics.delta_fpr, counts)
    parity = _guarded(flags, "dpd", metrics.dpd, counts)
    eq_odds = _guarded(flags, "deodds", metrics.deodds, counts)
    df = _guarded(flags, "df_check", lambda c: metrics.df_check(c, settings.epsilon), counts)
    if_alpha = _guarded(flags, "if_alpha_check", lambda c: metrics.if_alpha_check(c, settings.alpha, settings.gamma), counts)
    gap = _guarded(flags, "certainty_gap", metrics.certainty_gap, data)
    _flag_excluded(flags, "tpr", tpr_gap, "no positives")
    _flag_excluded(flags, "fpr", fpr_gap, "no negatives")
    _flag_excluded(flags, "deodds", eq_odds, "missing positives or negatives")

    means = metrics.mean_certainty(data)
    zone = metrics.uncertainty_zone_fraction(data, settings.zone)

    per_subgroup = {}
    for i, key in enumerate(data.keys):
        c = counts[key]
        if c.n == 0:
            flags.append({"metric": "subgroup", "subgroup": key.label, "reason": "no rows"})
        rows = data.group_index == i
        auc = _guarded(flags, "auc", roc_auc, data.scores[rows], data.labels[rows], subgroup=key.label) if c.n else None
        per_subgroup[key.label] = {
            "n": c.n,
            "positives": c.positives,
            "negatives": c.negatives,
            "tp": c.tp,
            "fp": c.fp,
            "tn": c.tn,
            "fn": c.fn,
            "tpr": c.tpr,
            "fpr": c.fpr,
            "positive_rate": c.positive_rate,
            "auc": auc,
            "deodds": None if eq_odds is None else eq_odds.per_subgroup[key],
            "mean_certainty": means[key],
            "uncertainty_zone_fraction": zone[key],
        }

    aggregate = {
        "n": len(data),
        "auc": _guarded(flags, "auc", roc_auc, data.scores, data.labels),
        "delta_tpr": None if tpr_gap is None else tpr_gap.value,
        "delta_fpr": None if fpr_gap is None else fpr_gap.value,
        "dpd": None if parity is None else parity.value,
        "mean_deodds": None if eq_odds is None else eq_odds.mean,
        "pooled_tpr": None if eq_odds is None else eq_odds.pooled_tpr,
        "pooled_fpr": None if eq_odds is None else eq_odds.pooled_fpr,
        "certainty_gap": gap,
        "df_pass": None if df is None else df.passed,
        "df_worst_ratio": None if df is None else df.worst,
        "if_alpha_pass": None if if_alpha is None else if_alpha.passed,
        "if_alpha_worst_L": None if if_alpha is None else if_alpha.worst,
    }
    return per_subgroup, aggregate, flags


def build_report(data: LabeledScores, settings: EvalSettings = EvalSettings()) -> FairnessReport:
    per_subgroup, aggregate, flags = compute(data, settings)
    for flag in flags:
        where = f" [{flag['subgroup']}]" if flag["subgroup"] else ""
        logger.warning(f"data quality: {flag['metric']}{where}: {flag['reason']}")
    logger.info(f"IF-alpha interpretation: {metrics.IF_ALPHA_INTERPRETATION}")
    return FairnessReport(per_subgroup, aggregate, flags, settings.echo())


def metric_vector(data: LabeledScores, settings: EvalSettings) -> dict[str, float]:
    """Every numeric report field under its dotted path; undefined values are NaN."""
    per_subgroup, aggregate, _ = compute(data, settings)
    out: dict[str, float] = {}

    def put(path: str, value) -> None:
        if isinstance(value, (bool, int)):
            return
        out[path] = math.nan if value is None else float(value)

    for name, value in aggregate.items():
        put(f"aggregate.{name}", value)
    for label, record in per_subgroup.items():
        for name, value in record.items():
            put(f"per_subgroup.{label}.{name}", value)
    return out


def attach_cis(report: FairnessReport, intervals: dict) -> FairnessReport:
    report.cis = {
        path: (None if ci is None else ci.to_dict())
        for path, ci in sorted(intervals.items())
    }
    return report

