"""
test_files.py — Dataset files, checkpoints, reports and canonical JSON on disk.
"""

import json

import numpy as np
import pytest

from fairness_eval.kde import kde_curve
from fairness_eval.report import build_report
from files_and_config.checkpoint import history_path, load_checkpoint, save_checkpoint
from files_and_config.dataset_io import (
    read_feature_dataset,
    read_header,
    read_scored_dataset,
    write_feature_dataset,
    write_scored_dataset,
)
from files_and_config.report_io import read_report, write_kde_csv, write_report
from shared_utils import canonical_json
from shared_utils.errors import SchemaError, UnknownSchemaVersion
from toy_training.encoders import class_text_inputs
from toy_training.trainer import train

HEADER = {"schema_version": 1, "kind": "scored", "name": "hand",
          "columns": {"id": "id", "label": "label", "attributes": ["grp"], "score": "score"}}


def write_raw(path, header: dict, body: str):
    path.write_text(json.dumps(header) + "\n" + body, encoding="utf-8")
    return path


class TestDatasets:

    def test_feature_round_trip_is_bitwise(self, tmp_path, tiny_records):
        path = tmp_path / "cohort.csv"
        write_feature_dataset(path, tiny_records, ("gender", "age"), name="tiny")
        records, header = read_feature_dataset(path)
        assert header.name == "tiny"
        assert header.attributes == ("gender", "age")
        for a, b in zip(tiny_records, records):
            assert (a.id, a.label, a.subgroup) == (b.id, b.label, b.subgroup)
            np.testing.assert_array_equal(a.features, b.features)

    def test_scored_round_trip(self, tmp_path, three_groups):
        path = tmp_path / "scored.csv"
        write_scored_dataset(path, three_groups, ("grp",))
        data, header = read_scored_dataset(path)
        assert header.kind == "scored"
        np.testing.assert_array_equal(data.scores, three_groups.scores)
        np.testing.assert_array_equal(data.labels, three_groups.labels)
        assert data.keys == three_groups.keys

    def test_attribute_values_stay_strings(self, tmp_path):
        path = write_raw(tmp_path / "d.csv", HEADER, "id,grp,label,score\n0,01,1,0.9\n1,01,0,0.1\n")
        data, _ = read_scored_dataset(path)
        assert data.keys[0].values == ("01",)

    def test_duplicate_id(self, tmp_path):
        path = write_raw(tmp_path / "d.csv", HEADER, "id,grp,label,score\n0,a,1,0.9\n0,a,0,0.1\n")
        with pytest.raises(SchemaError) as info:
            read_scored_dataset(path)
        assert info.value.field == "id"

    def test_missing_column(self, tmp_path):
        path = write_raw(tmp_path / "d.csv", HEADER, "id,grp,label\n0,a,1\n")
        with pytest.raises(SchemaError):
            read_scored_dataset(path)

    def test_score_out_of_range(self, tmp_path):
        path = write_raw(tmp_path / "d.csv", HEADER, "id,grp,label,score\n0,a,1,1.5\n")
        with pytest.raises(SchemaError):
            read_scored_dataset(path)

    def test_kind_mismatch(self, tmp_path, three_groups):
        path = tmp_path / "scored.csv"
        write_scored_dataset(path, three_groups, ("grp",))
        with pytest.raises(SchemaError) as info:
            read_feature_dataset(path)
        assert info.value.field == "kind"

    def test_unknown_version(self, tmp_path):
        path = write_raw(tmp_path / "d.csv", {**HEADER, "schema_version": 7}, "id,grp,label,score\n")
        with pytest.raises(UnknownSchemaVersion):
            read_header(path)

    def test_header_not_json(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,grp,label,score\n0,a,1,0.9\n", encoding="utf-8")
        with pytest.raises(SchemaError) as info:
            read_header(path)
        assert info.value.line == 1


class TestCheckpoints:

    def test_round_trip(self, tmp_path, tiny_records, quick_train_config):
        texts = class_text_inputs(2, len(tiny_records[0].features), seed=5)
        model = train(tiny_records, texts, quick_train_config)
        path = save_checkpoint(tmp_path / "model.json", model)
        loaded = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.encoders.image_weights, model.encoders.image_weights)
        np.testing.assert_array_equal(loaded.encoders.text_weights, model.encoders.text_weights)
        np.testing.assert_array_equal(loaded.class_texts.class_texts, model.class_texts.class_texts)
        assert loaded.config == model.config
        assert loaded.history == model.history
        assert history_path(path).read_text().startswith("epoch,clip_loss,cmac_loss,total_loss,batches\n")

    def test_wrong_kind(self, tmp_path, three_groups):
        path = write_report(tmp_path / "report.json", build_report(three_groups))
        with pytest.raises(SchemaError):
            load_checkpoint(path)


class TestReports:

    def test_round_trip(self, tmp_path, three_groups):
        report = build_report(three_groups)
        path = write_report(tmp_path / "report.json", report)
        assert read_report(path) == report

    def test_writes_are_byte_stable(self, tmp_path, three_groups):
        a = write_report(tmp_path / "a.json", build_report(three_groups))
        b = write_report(tmp_path / "b.json", read_report(a))
        assert a.read_bytes() == b.read_bytes()

    def test_kde_csv(self, tmp_path, rng):
        path = write_kde_csv(tmp_path / "kde.csv", {"A": kde_curve(rng.uniform(size=30))})
        lines = path.read_text().splitlines()
        assert lines[0] == "subgroup,x,density"
        assert len(lines) == 1 + 201


class TestCanonicalJson:

    def test_layout(self):
        assert canonical_json.dumps({"b": 1, "a": [1.0, 0.5]}) == '{\n  "a": [1.0, 0.5],\n  "b": 1\n}\n'

    def test_non_finite(self):
        assert canonical_json.dumps([float("nan"), float("inf")]) == '["nan", "inf"]\n'

    def test_doubles_survive(self):
        value = 0.1 + 0.2
        assert json.loads(canonical_json.dumps({"v": value}))["v"] == value

    def test_read_versioned(self, tmp_path):
        path = tmp_path / "doc.json"
        canonical_json.write(path, {"schema_version": 1, "kind": "comparison"})
        assert canonical_json.read_versioned(path, "comparison")["kind"] == "comparison"
        with pytest.raises(SchemaError):
            canonical_json.read_versioned(path, "checkpoint")
        canonical_json.write(path, {"schema_version": 3, "kind": "comparison"})
        with pytest.raises(UnknownSchemaVersion):
            canonical_json.read_versioned(path, "comparison")
