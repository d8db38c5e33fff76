"""
test_config.py — Config parsing, field-path errors and command-line overrides.
"""

import json
from pathlib import Path

import pytest

from files_and_config.config import RunConfig, load_config, parse_config, with_overrides
from shared_utils.errors import SchemaError, UnknownSchemaVersion

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

CUSTOM_COHORT = {
    "name": "two_groups",
    "attribute_names": ["gender", "age"],
    "d_in": 4,
    "seed": 1,
    "subgroups": [
        {"key": ["female", "young"], "n": 30, "prevalence": 0.3, "separation": 1.0},
        {"key": ["male", "old"], "n": 30, "prevalence": 0.5, "separation": 2.0},
    ],
}


def write_config(tmp_path, doc) -> Path:
    path = tmp_path / "config.json"
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
    return path


class TestParse:

    def test_defaults(self):
        cfg = load_config(None)
        assert cfg == RunConfig()
        assert cfg.cohort is None
        assert cfg.bootstrap is None
        assert cfg.train.lambda_cmac == 0.5
        assert cfg.eval.zone == (0.40, 0.60)

    @pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_shipped_configs_parse(self, path):
        cfg = load_config(path)
        assert cfg.cohort is not None

    def test_custom_cohort(self):
        cfg = parse_config({"cohort": CUSTOM_COHORT})
        spec = cfg.cohort.spec
        assert spec.total == 60
        assert spec.d_in == 4
        assert [s.key.label for s in spec.subgroups] == ["female|young", "male|old"]

    def test_atypical_subgroup(self):
        cohort = json.loads(json.dumps(CUSTOM_COHORT))
        cohort["subgroups"][0]["atypical"] = 2.5
        cfg = parse_config({"cohort": cohort})
        assert [s.atypical for s in cfg.cohort.spec.subgroups] == [2.5, 0.0]
        assert cfg.echo()["cohort"]["subgroups"][0]["atypical"] == 2.5

    def test_shipped_derm6_regime(self):
        cfg = load_config(CONFIG_DIR / "derm6_default.json")
        assert cfg.train.temperature == 0.5
        assert (cfg.train.kernel.bandwidth_mode, cfg.train.kernel.bandwidth) == ("fixed", 1.0)

    def test_preset_cohort(self):
        cfg = parse_config({"cohort": {"preset": "oph8", "seed": 5}})
        assert cfg.cohort.preset == "oph8"
        assert cfg.cohort.spec.seed == 5

    def test_bootstrap_section(self):
        assert parse_config({"bootstrap": {"enabled": False}}).bootstrap is None
        boot = parse_config({"bootstrap": {"n_resamples": 50, "workers": 2}}).bootstrap
        assert (boot.n_resamples, boot.workers) == (50, 2)

    def test_echo_is_plain(self):
        echo = parse_config({"cohort": CUSTOM_COHORT}).echo()
        assert echo["cohort"]["subgroups"][1]["key"] == ["male", "old"]
        assert echo["eval"]["zone"] == [0.4, 0.6]
        assert echo["train"]["kernel"] == {"bandwidth_mode": "median", "bandwidth": None}


class TestSchemaErrors:

    def test_field_path_of_bad_prevalence(self):
        cohort = json.loads(json.dumps(CUSTOM_COHORT))
        cohort["subgroups"][0]["prevalence"] = 1.5
        with pytest.raises(SchemaError) as info:
            parse_config({"cohort": cohort})
        assert info.value.field == "cohort.subgroups[0].prevalence"

    def test_unknown_key(self):
        with pytest.raises(SchemaError) as info:
            parse_config({"train": {"epoch": 3}})
        assert info.value.field == "train.epoch"

    def test_wrong_type(self):
        with pytest.raises(SchemaError) as info:
            parse_config({"train": {"epochs": "ten"}})
        assert info.value.field == "train.epochs"

    def test_unknown_schema_version(self):
        with pytest.raises(UnknownSchemaVersion):
            parse_config({"schema_version": 2})

    def test_invalid_json_reports_line(self, tmp_path):
        path = write_config(tmp_path, '{\n  "train": {\n    "epochs": 3,\n  }\n}\n')
        with pytest.raises(SchemaError) as info:
            load_config(path)
        assert info.value.line == 4

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            load_config(tmp_path / "absent.json")

    @pytest.mark.parametrize("fractions", [[0.5, 0.2, 0.2], [0.5, 0.5]])
    def test_bad_fractions(self, fractions):
        with pytest.raises(SchemaError) as info:
            parse_config({"split": {"fractions": fractions}})
        assert info.value.field == "split.fractions"

    def test_duplicate_subgroup(self):
        cohort = json.loads(json.dumps(CUSTOM_COHORT))
        cohort["subgroups"][1]["key"] = ["female", "young"]
        with pytest.raises(SchemaError) as info:
            parse_config({"cohort": cohort})
        assert info.value.field == "cohort"

    def test_missing_cohort(self):
        with pytest.raises(SchemaError):
            RunConfig().require_cohort()


class TestOverrides:

    def test_overrides_apply(self):
        cfg = with_overrides(RunConfig(), seeds=[4, 5], mode="erm", lambda_cmac=1.0, zone=(0.3, 0.7), bootstrap=25)
        assert cfg.experiment.seeds == (4, 5)
        assert (cfg.train.mode, cfg.train.lambda_cmac) == ("erm", 1.0)
        assert cfg.eval.zone == (0.3, 0.7)
        assert cfg.bootstrap.n_resamples == 25

    def test_negative_lambda(self):
        with pytest.raises(SchemaError) as info:
            with_overrides(RunConfig(), lambda_cmac=-1.0)
        assert info.value.field == "--lambda"

    def test_bad_zone(self):
        with pytest.raises(SchemaError):
            with_overrides(RunConfig(), zone=(0.7, 0.3))

    def test_no_overrides_is_identity(self):
        cfg = parse_config({"cohort": CUSTOM_COHORT})
        assert with_overrides(cfg) == cfg
