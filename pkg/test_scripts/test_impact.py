"""
test_impact.py — False negatives prevented, checked against reference subgroup tables.
"""

import pytest

from fairness_eval.impact import fn_prevented, impact_table
from shared_utils.errors import InputError, ZeroBaselineFN

# (subgroup, positives, FN baseline, FN new, expected cell)
DERM_ROWS = [
    ("female|0-40", 13, 5, 2, "3 (60.0%)"),
    ("female|41-60", 55, 6, 3, "3 (50.0%)"),
    ("female|60+", 67, 12, 9, "3 (25.0%)"),
    ("male|0-40", 8, 3, 2, "1 (33.3%)"),
    ("male|41-60", 66, 10, 9, "1 (10.0%)"),
    ("male|60+", 170, 28, 21, "7 (25.0%)"),
]

OPH_ROWS = [
    ("female|0-60|white", 37, 35, 34, "1 (2.9%)"),
    ("female|0-60|non-white", 43, 35, 33, "2 (5.7%)"),
    ("female|60+|white", 119, 86, 81, "5 (5.8%)"),
    ("female|60+|non-white", 65, 44, 40, "4 (9.1%)"),
    ("male|0-60|white", 77, 71, 69, "2 (2.8%)"),
    ("male|0-60|non-white", 94, 81, 79, "2 (2.5%)"),
    ("male|60+|white", 226, 158, 149, "9 (5.7%)"),
    ("male|60+|non-white", 60, 39, 36, "3 (7.7%)"),
]


class TestReferenceTables:

    @pytest.mark.parametrize("rows, total", [(DERM_ROWS, "18 (28.1%)"), (OPH_ROWS, "28 (5.1%)")])
    def test_rows_and_total(self, rows, total):
        table = impact_table([r[:4] for r in rows])
        assert [row.formatted() for row in table.rows] == [r[4] for r in rows]
        assert table.total.formatted() == total

    def test_derm_totals(self):
        total = impact_table([r[:4] for r in DERM_ROWS]).total
        assert (total.fn_baseline, total.fn_new, total.positives) == (64, 46, 379)

    def test_oph_totals(self):
        total = impact_table([r[:4] for r in OPH_ROWS]).total
        assert (total.fn_baseline, total.fn_new) == (549, 521)


class TestFnPrevented:

    def test_zero_baseline(self):
        with pytest.warns(ZeroBaselineFN):
            row = fn_prevented(10, 0, 0, subgroup="g")
        assert row.relative is None
        assert row.formatted() == "0 (n/a)"

    def test_new_model_can_be_worse(self):
        row = fn_prevented(10, 2, 3)
        assert row.prevented == -1
        assert row.formatted() == "-1 (-50.0%)"

    @pytest.mark.parametrize("args", [(5, 6, 0), (5, 0, 6), (-1, 0, 0), (5, 1.5, 0)])
    def test_rejects_impossible_counts(self, args):
        with pytest.raises(InputError):
            fn_prevented(*args)

    def test_empty_table(self):
        with pytest.raises(InputError):
            impact_table([])

    def test_to_dict(self):
        table = impact_table([("g", 10, 4, 1)])
        doc = table.to_dict()
        assert doc["rows"][0]["prevented"] == 3
        assert doc["total"]["relative"] == pytest.approx(0.75)
