"""
roc.py — ROC AUC in Mann–Whitney form and the fast DeLong paired-AUC test.

The DeLong path computes placement values from midranks, which is
O(n log n) per model instead of enumerating every (positive, negative) pair.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm, rankdata

from shared_utils.errors import DegenerateVariance, InputError, LengthMismatch, SingleClass

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-15
Z_95 = 1.96


@dataclass(frozen=True)
class RocInput:
    scores: np.ndarray
    labels: np.ndarray

    @classmethod
    def of(cls, scores: Sequence[float], labels: Sequence[int]) -> "RocInput":
        s = np.asarray(scores, dtype=np.float64).ravel()
        y = np.asarray(labels).ravel()
        if s.shape != y.shape:
            raise LengthMismatch(f"{s.size} scores but {y.size} labels")
        if not np.isin(y, (0, 1)).all():
            raise InputError("labels must be 0 or 1")
        return cls(s, y.astype(np.int64))

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        return self.scores[self.labels == 1], self.scores[self.labels == 0]


@dataclass(frozen=True)
class DeLongResult:
    auc_a: float
    auc_b: float
    z: float
    p_two_sided: float
    ci_low: float
    ci_high: float
    var_diff: float

    @property
    def diff(self) -> float:
        return self.auc_a - self.auc_b

    def to_dict(self) -> dict:
        return {
            "auc_a": self.auc_a,
            "auc_b": self.auc_b,
            "delta_auc": self.diff,
            "z": self.z,
            "p_two_sided": self.p_two_sided,
            "ci95": [self.ci_low, self.ci_high],
            "var_diff": self.var_diff,
        }


def roc_auc(data: RocInput | Sequence[float], labels: Sequence[int] | None = None) -> float:
    """P(score_pos > score_neg) + ½·P(tie), from midranks."""
    roc = data if isinstance(data, RocInput) else RocInput.of(data, labels)
    m = int(roc.labels.sum())
    n = roc.labels.size - m
    if m == 0 or n == 0:
        raise SingleClass(f"AUC needs both classes (positives={m}, negatives={n})")
    ranks = rankdata(roc.scores)
    rank_sum = float(ranks[roc.labels == 1].sum())
    return (rank_sum - m * (m + 1) / 2.0) / (m * n)


# ─── DeLong ───────────────────────────────────────────────────────────────────

def placement_values(positives: np.ndarray, negatives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Structural components for one model.
    v10[i]: share of negatives ranked below positive i (ties count ½).
    v01[j]: share of positives ranked above negative j (ties count ½).
    """
    m, n = positives.size, negatives.size
    overall = rankdata(np.concatenate([positives, negatives]))
    within_pos = rankdata(positives)
    within_neg = rankdata(negatives)
    v10 = (overall[:m] - within_pos) / n
    v01 = 1.0 - (overall[m:] - within_neg) / m
    return v10, v01


def delong_test(scores_a: Sequence[float], scores_b: Sequence[float], labels: Sequence[int]) -> DeLongResult:
    a = RocInput.of(scores_a, labels)
    b = RocInput.of(scores_b, labels)
    m = int(a.labels.sum())
    n = a.labels.size - m
    if m < 2 or n < 2:
        raise SingleClass(f"DeLong needs at least 2 positives and 2 negatives (got {m} and {n})")

    v10_a, v01_a = placement_values(*a.split())
    v10_b, v01_b = placement_values(*b.split())
    auc_a, auc_b = float(v10_a.mean()), float(v10_b.mean())

    s10 = np.cov(np.vstack([v10_a, v10_b]))
    s01 = np.cov(np.vstack([v01_a, v01_b]))
    cov = s10 / m + s01 / n
    var = float(cov[0, 0] + cov[1, 1] - 2.0 * cov[0, 1])
    if not var >= VARIANCE_FLOOR:
        raise DegenerateVariance(f"variance of the AUC difference is {var:.3g}; the two score sets rank identically")

    se = math.sqrt(var)
    diff = auc_a - auc_b
    z = diff / se
    p = float(2.0 * norm.sf(abs(z)))
    logger.debug(f"DeLong: AUC {auc_a:.4f} vs {auc_b:.4f}, z={z:.3f}, p={p:.3g}")
    return DeLongResult(auc_a, auc_b, z, p, diff - Z_95 * se, diff + Z_95 * se, var)
