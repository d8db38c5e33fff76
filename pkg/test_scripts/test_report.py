"""
test_report.py — FairnessReport assembly on the hand-checked three-subgroup set.
"""

import math

import numpy as np
import pytest

from fairness_eval.report import EvalSettings, FairnessReport, attach_cis, build_report, metric_vector
from shared_utils.errors import InputError, SchemaError
from stat_inference.bootstrap import BootstrapResult


@pytest.fixture
def report(three_groups):
    return build_report(three_groups)


class TestBuildReport:

    def test_aggregate(self, report):
        agg = report.aggregate
        assert agg["n"] == 10
        assert agg["auc"] == pytest.approx(22 / 24)
        assert agg["delta_tpr"] == pytest.approx(0.5)
        assert agg["delta_fpr"] == pytest.approx(0.5)
        assert agg["dpd"] == pytest.approx(0.0)
        assert agg["mean_deodds"] == pytest.approx(0.5)
        assert agg["certainty_gap"] == pytest.approx(0.2)
        assert agg["df_pass"] is False
        assert agg["df_worst_ratio"] == pytest.approx(2.0)
        assert agg["if_alpha_pass"] is False
        assert agg["if_alpha_worst_L"] == pytest.approx(0.5)

    def test_per_subgroup(self, report):
        a, b, c = (report.per_subgroup[k] for k in ("A", "B", "C"))
        assert (a["tp"], a["fp"], a["tn"], a["fn"]) == (1, 1, 1, 1)
        assert a["auc"] == pytest.approx(0.75)
        assert b["auc"] == pytest.approx(1.0)
        assert c["auc"] is None
        assert c["tpr"] is None
        assert c["fpr"] == pytest.approx(0.5)
        assert c["deodds"] is None
        assert a["mean_certainty"] == pytest.approx(0.6)
        assert c["uncertainty_zone_fraction"] == pytest.approx(0.5)

    def test_flags_name_the_undefined_metrics(self, report):
        flagged = {(f["metric"], f["subgroup"]) for f in report.flags}
        assert flagged == {("tpr", "C"), ("deodds", "C"), ("auc", "C")}

    def test_single_class_population_still_reports(self, three_groups):
        negatives_only = three_groups.with_labels(np.zeros(10, dtype=int))
        doc = build_report(negatives_only)
        assert doc.aggregate["auc"] is None
        assert doc.aggregate["delta_tpr"] is None
        assert doc.aggregate["mean_deodds"] is None
        assert {f["metric"] for f in doc.flags} >= {"auc", "delta_tpr", "deodds"}

    def test_config_echo(self, report):
        assert report.config["deodds_population_rates"] == "pooled"
        assert report.config["zone"] == [0.4, 0.6]

    def test_settings_validation(self):
        with pytest.raises(InputError):
            EvalSettings(threshold=1.0)
        with pytest.raises(InputError):
            EvalSettings(zone=(0.7, 0.3))


class TestSerialisation:

    def test_round_trip(self, report):
        assert FairnessReport.from_dict(report.to_dict()) == report

    def test_missing_field(self, report):
        doc = report.to_dict()
        del doc["aggregate"]
        with pytest.raises(SchemaError):
            FairnessReport.from_dict(doc)

    def test_attach_cis(self, report):
        attach_cis(report, {"aggregate.auc": BootstrapResult(0.9, 0.8, 1.0, 100), "aggregate.dpd": None})
        doc = report.to_dict()
        assert doc["cis"]["aggregate.auc"] == {"point": 0.9, "lo": 0.8, "hi": 1.0}
        assert doc["cis"]["aggregate.dpd"] is None


class TestMetricVector:

    def test_numeric_fields_only(self, three_groups):
        vec = metric_vector(three_groups, EvalSettings())
        assert vec["aggregate.auc"] == pytest.approx(22 / 24)
        assert "aggregate.n" not in vec
        assert "aggregate.df_pass" not in vec
        assert "per_subgroup.A.tp" not in vec
        assert math.isnan(vec["per_subgroup.C.auc"])
        assert vec["per_subgroup.B.tpr"] == 1.0
