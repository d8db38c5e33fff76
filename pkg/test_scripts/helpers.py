"""
helpers.py — Builders shared by the test modules.
"""

import numpy as np

from cohorts_and_splits.synthetic import CohortSpec, SubgroupSpec
from fairness_eval.labeled import LabeledScores
from shared_utils.subgroups import SubgroupKey

POSITIVE_SCORE = 0.9
NEGATIVE_SCORE = 0.1


def key(label: str) -> SubgroupKey:
    return SubgroupKey.parse(label)


def labeled_from_counts(counts: dict, start_id: int = 0) -> LabeledScores:
    """
    Rows realising the given per-subgroup confusion counts
    {label: (tp, fp, tn, fn)}; predicted positives score 0.9, negatives 0.1.
    """
    ids, groups, labels, scores = [], [], [], []
    next_id = start_id
    for label, (tp, fp, tn, fn) in counts.items():
        for y, s, count in ((1, POSITIVE_SCORE, tp), (0, POSITIVE_SCORE, fp), (0, NEGATIVE_SCORE, tn), (1, NEGATIVE_SCORE, fn)):
            for _ in range(count):
                ids.append(next_id)
                groups.append(key(label))
                labels.append(y)
                scores.append(s)
                next_id += 1
    return LabeledScores.from_rows(ids, groups, labels, scores)


def impact_fixtures(rows) -> tuple[LabeledScores, LabeledScores]:
    """
    Baseline and candidate scored sets over the same samples from
    (label, positives, fn_baseline, fn_new) rows; 10 true negatives per subgroup.
    """
    ids, groups, labels, base, cand = [], [], [], [], []
    for label, positives, fn_base, fn_new in rows:
        for k in range(positives):
            ids.append(len(ids))
            groups.append(key(label))
            labels.append(1)
            base.append(NEGATIVE_SCORE if k < fn_base else POSITIVE_SCORE)
            cand.append(NEGATIVE_SCORE if k < fn_new else POSITIVE_SCORE)
        for _ in range(10):
            ids.append(len(ids))
            groups.append(key(label))
            labels.append(0)
            base.append(NEGATIVE_SCORE)
            cand.append(NEGATIVE_SCORE)
    return (LabeledScores.from_rows(ids, groups, labels, base),
            LabeledScores.from_rows(ids, groups, labels, cand))


def tiny_spec(n: int = 40, d_in: int = 4, seed: int = 3) -> CohortSpec:
    return CohortSpec(
        subgroups=(
            SubgroupSpec(SubgroupKey(("female", "young")), n, 0.3, 1.0),
            SubgroupSpec(SubgroupKey(("male", "old")), n, 0.4, 2.5),
        ),
        d_in=d_in,
        seed=seed,
        name="tiny",
    )


def random_unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def numeric_grad(f, v: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of a 1-D array."""
    out = np.empty_like(v)
    for i in range(v.size):
        up, down = v.copy(), v.copy()
        up[i] += step
        down[i] -= step
        out[i] = (f(up) - f(down)) / (2 * step)
    return out
