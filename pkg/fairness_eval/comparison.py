"""
comparison.py — Baseline vs candidate on the same test samples.

Covers the AUC change (paired DeLong), a Wilcoxon signed-rank test on the
paired per-subgroup DEOdds, two-proportion z tests on the baseline's worst-off
subgroup for sensitivity and positive-prediction rate, the false-negatives
prevented table, and the non-inferiority/fairness success verdict.
"""

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from fairness_eval import metrics
from fairness_eval.impact import impact_table
from fairness_eval.labeled import ConfusionCounts, LabeledScores, confusion_by_subgroup
from fairness_eval.report import EvalSettings, FairnessReport
from shared_utils.errors import InputError, NumericalError, PairingMismatch
from shared_utils.subgroups import SubgroupKey
from stat_inference.hypothesis import two_prop_ztest, wilcoxon_signed_rank
from stat_inference.roc import delong_test, roc_auc

logger = logging.getLogger(__name__)

MAX_OFFENDERS = 10


@dataclass(frozen=True)
class VerdictRule:
    auc_margin: float = 0.02
    significance: float = 0.05


def _status(exc: Exception) -> dict:
    return {"status": type(exc).__name__, "message": str(exc)}


def _ok(result) -> dict:
    return {"status": "ok", **result.to_dict()}


# ─── Pairing ──────────────────────────────────────────────────────────────────

def pair_scored(baseline: LabeledScores, candidate: LabeledScores) -> LabeledScores:
    """Candidate rows reordered to the baseline's id order; ids, labels and subgroups must agree."""
    a_ids, b_ids = baseline.ids, candidate.ids
    only_a = np.setdiff1d(a_ids, b_ids)
    only_b = np.setdiff1d(b_ids, a_ids)
    if only_a.size or only_b.size:
        offenders = sorted(set(only_a.tolist()) | set(only_b.tolist()))[:MAX_OFFENDERS]
        raise PairingMismatch(
            f"the two inputs hold different samples ({only_a.size} ids only in baseline, "
            f"{only_b.size} only in candidate)",
            offenders=offenders,
        )
    position = {int(i): k for k, i in enumerate(b_ids)}
    aligned = candidate.take(np.asarray([position[int(i)] for i in a_ids], dtype=np.int64))
    a_groups, b_groups = baseline.subgroups, aligned.subgroups
    bad = [
        int(i) for i, ya, yb, ga, gb in zip(a_ids, baseline.labels, aligned.labels, a_groups, b_groups)
        if ya != yb or ga != gb
    ]
    if bad:
        raise PairingMismatch(f"{len(bad)} samples carry different labels or subgroups", offenders=bad[:MAX_OFFENDERS])
    return LabeledScores.from_rows(aligned.ids, b_groups, aligned.labels, aligned.scores, aligned.predicted)


def counts_from_report(report: FairnessReport) -> dict[SubgroupKey, ConfusionCounts]:
    return {
        SubgroupKey.parse(label): ConfusionCounts(r["tp"], r["fp"], r["tn"], r["fn"])
        for label, r in sorted(report.per_subgroup.items())
    }


def pair_counts(a: Mapping[SubgroupKey, ConfusionCounts], b: Mapping[SubgroupKey, ConfusionCounts]) -> None:
    """Report-level pairing: same subgroups with the same positives and negatives."""
    bad = sorted(
        str(k) for k in set(a) | set(b)
        if k not in a or k not in b or (a[k].positives, a[k].negatives) != (b[k].positives, b[k].negatives)
    )
    if bad:
        raise PairingMismatch("the two reports describe different test populations", offenders=bad[:MAX_OFFENDERS])


# ─── Tests on counts ──────────────────────────────────────────────────────────

def _worst(counts, rate: str) -> SubgroupKey | None:
    values = {k: getattr(c, rate) for k, c in counts.items() if getattr(c, rate) is not None}
    if not values:
        return None
    return min(values, key=lambda k: (values[k], k))


def _ztest_on(counts_a, counts_b, rate: str) -> dict:
    key = _worst(counts_a, rate)
    if key is None:
        return {"status": "NoEligibleSubgroups", "message": f"no subgroup has a defined {rate}"}
    a, b = counts_a[key], counts_b[key]
    if rate == "tpr":
        x_b, x_a, n = b.tp, a.tp, a.positives
    else:
        x_b, x_a, n = b.tp + b.fp, a.tp + a.fp, a.n
    try:
        out = _ok(two_prop_ztest(x_b, n, x_a, n))
    except (InputError, NumericalError) as exc:
        out = _status(exc)
    out["subgroup"] = key.label
    return out


def _gap(fn, counts):
    try:
        return fn(counts).value
    except (InputError, NumericalError):
        return None


def compare_counts(counts_a, counts_b) -> dict:
    """Everything that needs only per-subgroup confusion counts."""
    doc: dict = {}
    try:
        eo_a, eo_b = metrics.deodds(counts_a), metrics.deodds(counts_b)
        keys = [k for k in eo_a.per_subgroup if eo_a.per_subgroup[k] is not None and eo_b.per_subgroup.get(k) is not None]
        diffs = [eo_b.per_subgroup[k] - eo_a.per_subgroup[k] for k in keys]
        doc["wilcoxon_deodds"] = _ok(wilcoxon_signed_rank(diffs))
        doc["wilcoxon_deodds"]["subgroups"] = [k.label for k in keys]
    except (InputError, NumericalError) as exc:
        doc["wilcoxon_deodds"] = _status(exc)

    doc["ztest_tpr"] = _ztest_on(counts_a, counts_b, "tpr")
    doc["ztest_dpd"] = _ztest_on(counts_a, counts_b, "positive_rate")

    gaps = {}
    for name, fn in (("delta_tpr", metrics.delta_tpr), ("dpd", metrics.dpd), ("delta_fpr", metrics.delta_fpr)):
        a, b = _gap(fn, counts_a), _gap(fn, counts_b)
        rel = None if a is None or b is None or a == 0 else (a - b) / a
        gaps[name] = {"baseline": a, "candidate": b, "relative_reduction": rel}
    doc["gaps"] = gaps

    table = impact_table(
        (k.label, counts_a[k].positives, counts_a[k].fn, counts_b[k].fn) for k in sorted(counts_a)
    )
    doc["impact"] = table.to_dict()
    doc["impact_formatted"] = {r.subgroup: r.formatted() for r in [*table.rows, table.total]}
    return doc


def verdict(doc: dict, rule: VerdictRule) -> dict:
    """Non-inferior AUC and a significant reduction in the sensitivity gap."""
    delta_auc = doc.get("auc", {}).get("delta")
    tpr = doc["gaps"]["delta_tpr"]
    z = doc["ztest_tpr"]
    reduced = tpr["baseline"] is not None and tpr["candidate"] is not None and tpr["candidate"] < tpr["baseline"]
    significant = z.get("status") == "ok" and z["p_two_sided"] < rule.significance
    non_inferior = delta_auc is not None and delta_auc >= -rule.auc_margin
    return {
        "non_inferior_auc": non_inferior,
        "delta_tpr_reduced": reduced,
        "tpr_change_significant": significant,
        "success": bool(non_inferior and reduced and significant),
        "auc_margin": rule.auc_margin,
        "significance": rule.significance,
    }


# ─── Entry points ─────────────────────────────────────────────────────────────

def compare_scored(
    baseline: LabeledScores,
    candidate: LabeledScores,
    settings: EvalSettings = EvalSettings(),
    rule: VerdictRule = VerdictRule(),
) -> dict:
    candidate = pair_scored(baseline, candidate)
    labels = baseline.labels
    counts_a = confusion_by_subgroup(baseline, settings.threshold)
    counts_b = confusion_by_subgroup(candidate, settings.threshold)

    doc: dict = {"samples": len(baseline)}
    try:
        auc_a, auc_b = roc_auc(baseline.scores, labels), roc_auc(candidate.scores, labels)
        doc["auc"] = {"baseline": auc_a, "candidate": auc_b, "delta": auc_b - auc_a}
    except InputError as exc:
        doc["auc"] = {"baseline": None, "candidate": None, "delta": None, **_status(exc)}
    try:
        doc["delong"] = _ok(delong_test(candidate.scores, baseline.scores, labels))
    except (InputError, NumericalError) as exc:
        doc["delong"] = _status(exc)

    per_subgroup = {}
    for i, key in enumerate(baseline.keys):
        rows = baseline.group_index == i
        try:
            per_subgroup[key.label] = _ok(delong_test(candidate.scores[rows], baseline.scores[rows], labels[rows]))
        except (InputError, NumericalError) as exc:
            per_subgroup[key.label] = _status(exc)
    doc["per_subgroup_delong"] = per_subgroup

    doc.update(compare_counts(counts_a, counts_b))
    doc["verdict"] = verdict(doc, rule)
    logger.info(
        f"Compared {len(baseline)} paired samples: ΔAUC={doc['auc']['delta']}, "
        f"ΔTPR {doc['gaps']['delta_tpr']['baseline']} → {doc['gaps']['delta_tpr']['candidate']}"
    )
    return doc


def compare_reports(
    baseline: FairnessReport,
    candidate: FairnessReport,
    rule: VerdictRule = VerdictRule(),
) -> dict:
    """Report-only comparison; DeLong needs per-sample scores and is marked unavailable."""
    counts_a, counts_b = counts_from_report(baseline), counts_from_report(candidate)
    pair_counts(counts_a, counts_b)
    auc_a, auc_b = baseline.aggregate.get("auc"), candidate.aggregate.get("auc")
    unavailable = {"status": "unavailable", "message": "reports carry no per-sample scores"}
    doc: dict = {
        "samples": sum(c.n for c in counts_a.values()),
        "auc": {
            "baseline": auc_a,
            "candidate": auc_b,
            "delta": None if auc_a is None or auc_b is None else auc_b - auc_a,
        },
        "delong": dict(unavailable),
        "per_subgroup_delong": {k.label: dict(unavailable) for k in counts_a},
    }
    doc.update(compare_counts(counts_a, counts_b))
    doc["verdict"] = verdict(doc, rule)
    return doc
