"""
batching.py — Subgroup-aware mini-batches.

Each subgroup is shuffled and cut into chunks of `min_subgroup_batch`
indices. Chunks are spread evenly over the epoch (chunk k of a subgroup with
m chunks sits at (k + phase)/m, phase random per subgroup) and the merged
sequence is cut into batches, so every batch draws from every subgroup large
enough to reach it, in proportion to its size.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from shared_utils.errors import InfeasibleStratification, InputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchPlan:
    batches: list[np.ndarray]
    stratification_ok: bool     # False when the pool holds fewer than 2 usable subgroups

    def __len__(self) -> int:
        return len(self.batches)

    def __iter__(self):
        return iter(self.batches)


def make_batches(dataset: Sequence, batch_size: int, seed, min_subgroup_batch: int = 2, warn: bool = True) -> BatchPlan:
    """
    Partition dataset indices into batches; `dataset` rows carry a `.subgroup`.
    With `warn=False` an infeasible plan shows only in `stratification_ok`.
    """
    if batch_size < 2 * min_subgroup_batch:
        raise InputError(f"batch_size {batch_size} must be ≥ 2 × min_subgroup_batch ({min_subgroup_batch})")
    n = len(dataset)
    if n == 0:
        raise InputError("cannot batch an empty dataset")

    members: dict = {}
    for i, row in enumerate(dataset):
        members.setdefault(row.subgroup, []).append(i)
    groups = sorted(members.items(), key=lambda kv: str(kv[0]))

    usable = sum(1 for _, idx in groups if len(idx) >= min_subgroup_batch)
    ok = usable >= 2
    if not ok and warn:
        warnings.warn(
            f"only {usable} subgroup(s) with ≥ {min_subgroup_batch} samples; the fairness term will be 0",
            InfeasibleStratification,
            stacklevel=2,
        )

    rng = np.random.default_rng(seed)
    keys, chunks = [], []
    for _, idx in groups:
        shuffled = rng.permutation(np.asarray(idx, dtype=np.int64))
        pieces = [shuffled[k:k + min_subgroup_batch] for k in range(0, shuffled.size, min_subgroup_batch)]
        phase = rng.random()
        keys.extend((k + phase) / len(pieces) for k in range(len(pieces)))
        chunks.extend(pieces)

    order = np.argsort(np.asarray(keys), kind="stable")
    sequence = np.concatenate([chunks[k] for k in order])
    batches = [sequence[s:s + batch_size] for s in range(0, n, batch_size)]
    # a runt tail cannot carry two subgroup pairs; fold it into the previous batch
    if len(batches) > 1 and batches[-1].size < 2 * min_subgroup_batch:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])

    logger.debug(f"{len(batches)} batches over {n} samples, {len(groups)} subgroups")
    return BatchPlan(batches, ok)
