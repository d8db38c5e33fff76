"""
impact.py — False negatives prevented per subgroup when a screening model
replaces a baseline, with a totals row.
"""

import warnings
from dataclasses import dataclass
from typing import Iterable

from shared_utils.errors import InputError, ZeroBaselineFN


@dataclass(frozen=True)
class ImpactRow:
    subgroup: str
    positives: int
    fn_baseline: int
    fn_new: int
    prevented: int
    relative: float | None      # None when the baseline missed nobody

    def formatted(self) -> str:
        """'3 (60.0%)' style cell; relative shown as n/a when undefined."""
        if self.relative is None:
            return f"{self.prevented} (n/a)"
        return f"{self.prevented} ({100.0 * self.relative:.1f}%)"

    def to_dict(self) -> dict:
        return {
            "subgroup": self.subgroup,
            "positives": self.positives,
            "fn_baseline": self.fn_baseline,
            "fn_new": self.fn_new,
            "prevented": self.prevented,
            "relative": self.relative,
        }


@dataclass(frozen=True)
class ImpactTable:
    rows: list[ImpactRow]
    total: ImpactRow

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows], "total": self.total.to_dict()}


def fn_prevented(positives: int, fn_baseline: int, fn_new: int, subgroup: str = "") -> ImpactRow:
    for name, value in (("positives", positives), ("fn_baseline", fn_baseline), ("fn_new", fn_new)):
        if int(value) != value or value < 0:
            raise InputError(f"{name} must be a non-negative integer, got {value}")
    if fn_baseline > positives or fn_new > positives:
        raise InputError(
            f"false negatives cannot exceed positives ({subgroup or 'row'}: "
            f"positives={positives}, fn_baseline={fn_baseline}, fn_new={fn_new})"
        )
    prevented = int(fn_baseline) - int(fn_new)
    relative = None
    if fn_baseline > 0:
        relative = prevented / fn_baseline
    else:
        warnings.warn(f"baseline has no false negatives in {subgroup or 'row'}", ZeroBaselineFN, stacklevel=2)
    return ImpactRow(subgroup, int(positives), int(fn_baseline), int(fn_new), prevented, relative)


def impact_table(triples: Iterable[tuple[str, int, int, int]]) -> ImpactTable:
    """Rows of (subgroup, positives, fn_baseline, fn_new) → table plus totals."""
    rows = [fn_prevented(p, fb, fn, subgroup=str(label)) for label, p, fb, fn in triples]
    if not rows:
        raise InputError("impact table needs at least one row")
    positives = sum(r.positives for r in rows)
    fn_baseline = sum(r.fn_baseline for r in rows)
    fn_new = sum(r.fn_new for r in rows)
    prevented = sum(r.prevented for r in rows)
    relative = prevented / fn_baseline if fn_baseline > 0 else None
    return ImpactTable(rows, ImpactRow("Total", positives, fn_baseline, fn_new, prevented, relative))
