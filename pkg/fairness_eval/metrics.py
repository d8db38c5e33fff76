"""
metrics.py — Intersectional fairness and certainty metrics.

Rate-gap metrics take the per-subgroup ConfusionCounts map; certainty metrics
take the LabeledScores directly. Subgroups that cannot carry a rate (no
positives for TPR, no negatives for FPR) are excluded and returned in
`excluded` so reports can flag them.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from fairness_eval.labeled import ConfusionCounts, LabeledScores, confusion_by_subgroup
from shared_utils.errors import DegeneratePopulation, InputError, NoEligibleSubgroups
from shared_utils.subgroups import SubgroupKey

logger = logging.getLogger(__name__)

Counts = Mapping[SubgroupKey, ConfusionCounts]

DEFAULT_ZONE = (0.40, 0.60)
IF_ALPHA_INTERPRETATION = (
    "IF-alpha uses the absolute TPR gap and the gap relative to the larger TPR "
    "(relative gap 0 when both TPRs are 0)"
)


@dataclass(frozen=True)
class GapResult:
    value: float
    rates: dict[SubgroupKey, float]
    excluded: tuple[SubgroupKey, ...] = ()


@dataclass(frozen=True)
class CriterionResult:
    passed: bool
    worst: float
    excluded: tuple[SubgroupKey, ...] = ()


@dataclass(frozen=True)
class DEOddsResult:
    per_subgroup: dict[SubgroupKey, float | None]
    mean: float
    pooled_tpr: float
    pooled_fpr: float
    excluded: tuple[SubgroupKey, ...] = field(default=())


# ─── Helpers ──────────────────────────────────────────────────────────────────

def _eligible_rates(counts: Counts, rate: str, what: str) -> tuple[dict[SubgroupKey, float], tuple[SubgroupKey, ...]]:
    rates, excluded = {}, []
    for key, c in counts.items():
        value = getattr(c, rate)
        if value is None:
            excluded.append(key)
        else:
            rates[key] = value
    if excluded:
        logger.debug(f"{rate}: excluded subgroups without {what}: {[str(k) for k in excluded]}")
    if len(rates) < 2:
        raise NoEligibleSubgroups(f"{rate} needs at least 2 subgroups with {what}, found {len(rates)}")
    return rates, tuple(excluded)


def _max_gap(values) -> float:
    arr = np.fromiter(values, dtype=np.float64)
    return float(arr.max() - arr.min())


def _as_counts(data_or_counts, threshold: float) -> Counts:
    if isinstance(data_or_counts, LabeledScores):
        return confusion_by_subgroup(data_or_counts, threshold)
    return data_or_counts


# ─── Rate gaps ────────────────────────────────────────────────────────────────

def delta_tpr(counts: Counts) -> GapResult:
    """Largest pairwise sensitivity gap over subgroups that have positives."""
    rates, excluded = _eligible_rates(counts, "tpr", "positives")
    return GapResult(_max_gap(rates.values()), rates, excluded)


def delta_fpr(counts: Counts) -> GapResult:
    rates, excluded = _eligible_rates(counts, "fpr", "negatives")
    return GapResult(_max_gap(rates.values()), rates, excluded)


def dpd(data_or_counts, threshold: float = 0.5) -> GapResult:
    """Demographic parity difference; depends on predictions only."""
    counts = _as_counts(data_or_counts, threshold)
    rates, excluded = _eligible_rates(counts, "positive_rate", "rows")
    return GapResult(_max_gap(rates.values()), rates, excluded)


def deodds(counts: Counts) -> DEOddsResult:
    """
    Per-subgroup |TPR(g) − TPR̄| + |FPR(g) − FPR̄| against pooled population rates.
    A subgroup missing either rate gets None and is left out of the mean.
    """
    tp = sum(c.tp for c in counts.values())
    fp = sum(c.fp for c in counts.values())
    positives = sum(c.positives for c in counts.values())
    negatives = sum(c.negatives for c in counts.values())
    if positives == 0 or negatives == 0:
        raise DegeneratePopulation(
            f"population needs positives and negatives (positives={positives}, negatives={negatives})"
        )
    pooled_tpr = tp / positives
    pooled_fpr = fp / negatives

    per, excluded = {}, []
    for key, c in counts.items():
        if c.tpr is None or c.fpr is None:
            per[key] = None
            excluded.append(key)
        else:
            per[key] = abs(c.tpr - pooled_tpr) + abs(c.fpr - pooled_fpr)
    values = [v for v in per.values() if v is not None]
    if not values:
        raise NoEligibleSubgroups("no subgroup has both positives and negatives")
    return DEOddsResult(per, float(np.mean(values)), pooled_tpr, pooled_fpr, tuple(excluded))


# ─── Pass/fail criteria ───────────────────────────────────────────────────────

def df_check(counts: Counts, epsilon: float = 0.5) -> CriterionResult:
    """Differential fairness: every pairwise TPR ratio within [e^-ε, e^ε]."""
    if epsilon < 0:
        raise InputError(f"epsilon must be non-negative, got {epsilon}")
    rates, excluded = _eligible_rates(counts, "tpr", "positives")
    hi, lo = max(rates.values()), min(rates.values())
    if lo == 0.0:
        worst = 1.0 if hi == 0.0 else math.inf
    else:
        worst = hi / lo
    return CriterionResult(worst <= math.exp(epsilon), worst, excluded)


def if_alpha_loss(tpr_a: float, tpr_b: float, alpha: float = 0.5) -> float:
    gap = abs(tpr_a - tpr_b)
    top = max(tpr_a, tpr_b)
    relative = gap / top if top > 0 else 0.0
    return alpha * gap + (1.0 - alpha) * relative


def if_alpha_check(counts: Counts, alpha: float = 0.5, gamma: float = 0.4) -> CriterionResult:
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must lie in [0, 1], got {alpha}")
    rates, excluded = _eligible_rates(counts, "tpr", "positives")
    worst = max(if_alpha_loss(a, b, alpha) for a, b in itertools.combinations(rates.values(), 2))
    return CriterionResult(worst <= gamma, worst, excluded)


# ─── Certainty ────────────────────────────────────────────────────────────────

def mean_certainty(data: LabeledScores) -> dict[SubgroupKey, float | None]:
    means = data.group_means(data.certainty)
    return {k: (None if np.isnan(m) else float(m)) for k, m in zip(data.keys, means)}


def certainty_gap(data: LabeledScores) -> float:
    """Largest gap between subgroup mean correct-class certainties."""
    means = [m for m in mean_certainty(data).values() if m is not None]
    if len(means) < 2:
        raise NoEligibleSubgroups(f"certainty gap needs 2 nonempty subgroups, found {len(means)}")
    return _max_gap(means)


def uncertainty_zone_fraction(data: LabeledScores, zone: tuple[float, float] = DEFAULT_ZONE) -> dict[SubgroupKey, float | None]:
    """Per subgroup, share of scores inside the closed zone; None for empty subgroups."""
    lo, hi = zone
    if not 0.0 <= lo <= hi <= 1.0:
        raise InputError(f"zone must satisfy 0 <= lo <= hi <= 1, got {zone}")
    inside = ((data.scores >= lo) & (data.scores <= hi)).astype(np.float64)
    fractions = data.group_means(inside)
    return {k: (None if np.isnan(f) else float(f)) for k, f in zip(data.keys, fractions)}
