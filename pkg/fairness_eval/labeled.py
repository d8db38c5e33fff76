"""
labeled.py — Per-sample evaluation rows and per-subgroup confusion counts.

LabeledScores keeps columns as numpy arrays so the bootstrap can resample
rows cheaply; subgroups are stored as an index into a canonical key tuple.
"""

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from shared_utils.errors import EmptySubgroup, InputError
from shared_utils.subgroups import SubgroupKey

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class LabeledScores:
    ids: np.ndarray
    group_index: np.ndarray
    keys: tuple[SubgroupKey, ...]
    labels: np.ndarray
    scores: np.ndarray              # probability of the positive class
    predicted: np.ndarray | None = None

    @classmethod
    def from_rows(
        cls,
        ids: Sequence[int],
        subgroups: Sequence[SubgroupKey],
        labels: Sequence[int],
        scores: Sequence[float],
        predicted: Sequence[int] | None = None,
    ) -> "LabeledScores":
        subgroups = [g if isinstance(g, SubgroupKey) else SubgroupKey(tuple(g)) for g in subgroups]
        keys = tuple(sorted(set(subgroups)))
        lookup = {k: i for i, k in enumerate(keys)}
        data = cls(
            ids=np.asarray(ids, dtype=np.int64),
            group_index=np.asarray([lookup[g] for g in subgroups], dtype=np.int64),
            keys=keys,
            labels=np.asarray(labels, dtype=np.int64),
            scores=np.asarray(scores, dtype=np.float64),
            predicted=None if predicted is None else np.asarray(predicted, dtype=np.int64),
        )
        data.validate()
        return data

    def validate(self) -> None:
        n = self.ids.shape[0]
        columns = {"group_index": self.group_index, "labels": self.labels, "scores": self.scores}
        if self.predicted is not None:
            columns["predicted"] = self.predicted
        for name, col in columns.items():
            if col.shape != (n,):
                raise InputError(f"column {name} has {col.shape[0]} rows, expected {n}")
        if np.unique(self.ids).size != n:
            raise InputError("sample ids must be unique")
        if not np.isin(self.labels, (0, 1)).all():
            raise InputError("true labels must be 0 or 1")
        if not (np.all(np.isfinite(self.scores)) and self.scores.min(initial=0.0) >= 0.0 and self.scores.max(initial=0.0) <= 1.0):
            raise InputError("scores must lie in [0, 1]")
        if self.predicted is not None and not np.isin(self.predicted, (0, 1)).all():
            raise InputError("predicted labels must be 0 or 1")
        if n and (self.group_index.min() < 0 or self.group_index.max() >= len(self.keys)):
            raise InputError("group index outside the subgroup key table")

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def take(self, indices: np.ndarray) -> "LabeledScores":
        """Rows at `indices` (repeats allowed); the subgroup key table is kept."""
        return LabeledScores(
            ids=self.ids[indices],
            group_index=self.group_index[indices],
            keys=self.keys,
            labels=self.labels[indices],
            scores=self.scores[indices],
            predicted=None if self.predicted is None else self.predicted[indices],
        )

    def with_labels(self, labels: Sequence[int]) -> "LabeledScores":
        return LabeledScores(self.ids, self.group_index, self.keys, np.asarray(labels, dtype=np.int64),
                             self.scores, self.predicted)

    @property
    def subgroups(self) -> list[SubgroupKey]:
        return [self.keys[i] for i in self.group_index]

    @property
    def certainty(self) -> np.ndarray:
        """Probability assigned to the correct class."""
        return np.where(self.labels == 1, self.scores, 1.0 - self.scores)

    def predictions(self, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
        """Stored predictions, else score ≥ threshold (the boundary predicts positive)."""
        if self.predicted is not None:
            return self.predicted
        return (self.scores >= threshold).astype(np.int64)

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.group_index, minlength=len(self.keys))

    def group_means(self, values: np.ndarray) -> np.ndarray:
        sizes = self.group_sizes()
        sums = np.bincount(self.group_index, weights=values, minlength=len(self.keys))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(sizes > 0, sums / np.maximum(sizes, 1), np.nan)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn

    @property
    def n(self) -> int:
        return self.positives + self.negatives

    @property
    def tpr(self) -> float | None:
        return self.tp / self.positives if self.positives else None

    @property
    def fpr(self) -> float | None:
        return self.fp / self.negatives if self.negatives else None

    @property
    def positive_rate(self) -> float | None:
        return (self.tp + self.fp) / self.n if self.n else None


def confusion_by_subgroup(data: LabeledScores, threshold: float = DEFAULT_THRESHOLD) -> dict[SubgroupKey, ConfusionCounts]:
    if not 0.0 < threshold < 1.0:
        raise InputError(f"threshold must lie in (0, 1), got {threshold}")
    pred = data.predictions(threshold)
    y = data.labels
    k = len(data.keys)

    def count(mask: np.ndarray) -> np.ndarray:
        return np.bincount(data.group_index[mask], minlength=k)

    tp = count((pred == 1) & (y == 1))
    fp = count((pred == 1) & (y == 0))
    tn = count((pred == 0) & (y == 0))
    fn = count((pred == 0) & (y == 1))
    out = {}
    for i, key in enumerate(data.keys):
        counts = ConfusionCounts(int(tp[i]), int(fp[i]), int(tn[i]), int(fn[i]))
        if counts.n == 0:
            warnings.warn(f"subgroup {key} has no rows", EmptySubgroup, stacklevel=2)
        out[key] = counts
    return out
