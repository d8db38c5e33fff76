"""
test_comparison.py — Paired baseline vs candidate comparisons and the success verdict.
"""

import numpy as np
import pytest

from fairness_eval.comparison import VerdictRule, compare_reports, compare_scored, pair_scored, verdict
from fairness_eval.labeled import LabeledScores
from fairness_eval.report import build_report
from shared_utils.errors import PairingMismatch, ZeroBaselineFN
from test_scripts.helpers import impact_fixtures, labeled_from_counts
from test_scripts.test_impact import DERM_ROWS


@pytest.fixture
def derm_pair():
    return impact_fixtures([r[:4] for r in DERM_ROWS])


class TestPairing:

    def test_candidate_is_reordered_by_id(self, three_groups):
        order = np.arange(len(three_groups))[::-1]
        shuffled = three_groups.take(order)
        paired = pair_scored(three_groups, shuffled)
        np.testing.assert_array_equal(paired.ids, three_groups.ids)
        np.testing.assert_array_equal(paired.scores, three_groups.scores)

    def test_missing_ids_are_reported(self, three_groups):
        other = LabeledScores.from_rows(
            ids=list(range(1, 11)), subgroups=three_groups.subgroups,
            labels=three_groups.labels, scores=three_groups.scores,
        )
        with pytest.raises(PairingMismatch) as info:
            pair_scored(three_groups, other)
        assert info.value.offenders == [0, 10]

    def test_label_disagreement(self, three_groups):
        flipped = three_groups.with_labels(np.r_[1 - three_groups.labels[:1], three_groups.labels[1:]])
        with pytest.raises(PairingMismatch) as info:
            pair_scored(three_groups, flipped)
        assert info.value.offenders == [0]


class TestCompareScored:

    def test_self_comparison(self, three_groups):
        with pytest.warns(ZeroBaselineFN):
            doc = compare_scored(three_groups, three_groups)
        assert doc["delong"]["status"] == "DegenerateVariance"
        assert doc["auc"]["delta"] == 0.0
        assert doc["wilcoxon_deodds"]["status"] == "AllZeroDifferences"
        assert doc["impact"]["total"]["prevented"] == 0
        assert doc["verdict"]["success"] is False

    def test_reference_table_through_comparison(self, derm_pair):
        baseline, candidate = derm_pair
        doc = compare_scored(baseline, candidate)
        for label, _, _, _, cell in DERM_ROWS:
            assert doc["impact_formatted"][label] == cell
        assert doc["impact_formatted"]["Total"] == "18 (28.1%)"

    def test_delong_direction_is_candidate_minus_baseline(self, derm_pair):
        baseline, candidate = derm_pair
        doc = compare_scored(baseline, candidate)
        assert doc["delong"]["status"] == "ok"
        assert doc["delong"]["delta_auc"] == pytest.approx(doc["auc"]["delta"])
        assert doc["auc"]["delta"] > 0

    def test_per_subgroup_delong_statuses(self, derm_pair):
        doc = compare_scored(*derm_pair)
        assert set(doc["per_subgroup_delong"]) == {r[0] for r in DERM_ROWS}
        assert all("status" in v for v in doc["per_subgroup_delong"].values())

    def test_ztest_targets_worst_baseline_subgroup(self, derm_pair):
        doc = compare_scored(*derm_pair)
        # female|0-40 has the lowest baseline sensitivity, 8/13
        assert doc["ztest_tpr"]["subgroup"] == "female|0-40"


class TestCompareReports:

    def test_delong_unavailable(self, derm_pair):
        baseline, candidate = derm_pair
        doc = compare_reports(build_report(baseline), build_report(candidate))
        assert doc["delong"]["status"] == "unavailable"
        assert doc["impact_formatted"]["Total"] == "18 (28.1%)"

    def test_population_mismatch(self):
        a = build_report(labeled_from_counts({"x": (3, 1, 4, 2), "y": (2, 2, 2, 2)}))
        b = build_report(labeled_from_counts({"x": (3, 1, 4, 3), "y": (2, 2, 2, 2)}))
        with pytest.raises(PairingMismatch) as info:
            compare_reports(a, b)
        assert info.value.offenders == ["x"]


class TestVerdict:

    def doc(self, delta_auc, base_gap, cand_gap, p):
        return {
            "auc": {"delta": delta_auc},
            "gaps": {"delta_tpr": {"baseline": base_gap, "candidate": cand_gap}},
            "ztest_tpr": {"status": "ok", "p_two_sided": p},
        }

    def test_success(self):
        assert verdict(self.doc(-0.01, 0.3, 0.1, 0.01), VerdictRule())["success"]

    def test_auc_loss_beyond_margin(self):
        out = verdict(self.doc(-0.03, 0.3, 0.1, 0.01), VerdictRule())
        assert not out["non_inferior_auc"]
        assert not out["success"]

    def test_not_significant(self):
        assert not verdict(self.doc(0.0, 0.3, 0.1, 0.2), VerdictRule())["success"]

    def test_gap_not_reduced(self):
        assert not verdict(self.doc(0.0, 0.1, 0.1, 0.01), VerdictRule())["delta_tpr_reduced"]
