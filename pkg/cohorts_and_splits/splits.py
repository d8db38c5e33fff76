"""
splits.py — Largest-remainder apportionment and stratified train/val/test splits.
"""

import math
from typing import Sequence

import numpy as np

from shared_utils.errors import BadFractions

DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)


def largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    """Integer counts summing to `total`, proportional to `weights`.

    Floors first, then hands the leftover units to the largest fractional parts;
    equal remainders go to the earlier position.
    """
    w = np.asarray(weights, dtype=np.float64)
    quotas = total * w / w.sum()
    counts = np.floor(quotas).astype(int)
    remainders = np.round(quotas - counts, 12)
    leftover = total - int(counts.sum())
    order = sorted(range(len(w)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts.tolist()


def _check_fractions(fractions: Sequence[float]) -> tuple[float, ...]:
    fr = tuple(float(f) for f in fractions)
    if not fr or any(f < 0 or not math.isfinite(f) for f in fr):
        raise BadFractions(f"fractions must be finite and non-negative, got {fr}")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise BadFractions(f"fractions must sum to 1 (±1e-9), got sum {sum(fr)!r}")
    return fr


def stratified_split(records: Sequence, fractions: Sequence[float] = DEFAULT_FRACTIONS, seed: int = 0) -> tuple[list, ...]:
    """Split per (subgroup × label) cell so each cell keeps the target proportions."""
    fr = _check_fractions(fractions)
    cells: dict[tuple, list] = {}
    for rec in records:
        cells.setdefault((rec.subgroup, rec.label), []).append(rec)

    rng = np.random.default_rng(seed)
    parts: list[list] = [[] for _ in fr]
    for cell_key in sorted(cells):
        members = sorted(cells[cell_key], key=lambda r: r.id)
        order = rng.permutation(len(members))
        start = 0
        for part, count in zip(parts, largest_remainder(len(members), fr)):
            part.extend(members[i] for i in order[start:start + count])
            start += count
    return tuple(sorted(part, key=lambda r: r.id) for part in parts)
