"""
config.py — Run configuration: one JSON document → frozen dataclasses.

Every section is optional except where a command needs it (`cohort` for
generate/experiment). Unknown keys, wrong types and out-of-range values raise
SchemaError naming the dotted path of the offending field, e.g.
`cohort.subgroups[2].prevalence`.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from cohorts_and_splits.presets import PRESET_NAMES, preset_spec
from cohorts_and_splits.splits import DEFAULT_FRACTIONS
from cohorts_and_splits.synthetic import CohortSpec, SubgroupSpec
from fairness_eval.report import EvalSettings
from fairness_losses.mmd import KernelConfig
from shared_utils.canonical_json import SCHEMA_VERSION, loads
from shared_utils.errors import InputError, SchemaError, UnknownSchemaVersion
from shared_utils.subgroups import SubgroupKey
from stat_inference.bootstrap import BootstrapConfig
from toy_training.trainer import MODES, TrainConfig

logger = logging.getLogger(__name__)


# ─── Sections ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class CohortConfig:
    spec: CohortSpec
    preset: str | None = None


@dataclass(frozen=True)
class SplitConfig:
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    seed: int = 0


@dataclass(frozen=True)
class EvalConfig:
    threshold: float = 0.5
    zone: tuple[float, float] = (0.40, 0.60)
    epsilon: float = 0.5
    alpha: float = 0.5
    gamma: float = 0.4
    kde_bandwidth: str | float = "silverman"
    positive_class: int = 1

    def settings(self) -> EvalSettings:
        return EvalSettings(self.threshold, self.zone, self.epsilon, self.alpha, self.gamma, self.kde_bandwidth)


@dataclass(frozen=True)
class ExperimentConfig:
    seeds: tuple[int, ...] = (1, 2, 3)
    modes: tuple[str, ...] = ("erm", "cmac")
    lambda_sweep: tuple[float, ...] = ()
    external_preset: str | None = None
    zero_shot: bool = True
    plots: bool = False
    auc_margin: float = 0.02            # non-inferiority margin for the success verdict
    significance: float = 0.05


@dataclass(frozen=True)
class RunConfig:
    cohort: CohortConfig | None = None
    split: SplitConfig = field(default_factory=SplitConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    bootstrap: BootstrapConfig | None = None
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    def require_cohort(self) -> CohortConfig:
        if self.cohort is None:
            raise SchemaError("a cohort section is required for this command", field="cohort")
        return self.cohort

    def echo(self) -> dict:
        """Plain-dict view of the resolved configuration for artifact headers."""
        return {
            "cohort": None if self.cohort is None else cohort_to_dict(self.cohort),
            "split": {"fractions": list(self.split.fractions), "seed": self.split.seed},
            "train": train_to_dict(self.train),
            "eval": {f.name: _plain(getattr(self.eval, f.name)) for f in fields(self.eval)},
            "bootstrap": None if self.bootstrap is None else {
                "n_resamples": self.bootstrap.n_resamples,
                "level": self.bootstrap.level,
                "seed": self.bootstrap.seed,
                "workers": self.bootstrap.workers,
            },
            "experiment": {f.name: _plain(getattr(self.experiment, f.name)) for f in fields(self.experiment)},
        }


def _plain(value):
    return list(value) if isinstance(value, tuple) else value


def train_to_dict(cfg: TrainConfig) -> dict:
    out = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "kernel"}
    out["kernel"] = {"bandwidth_mode": cfg.kernel.bandwidth_mode, "bandwidth": cfg.kernel.bandwidth}
    return out


def cohort_to_dict(cohort: CohortConfig) -> dict:
    spec = cohort.spec
    return {
        "preset": cohort.preset,
        "name": spec.name,
        "seed": spec.seed,
        "direction_seed": spec.direction_seed,
        "d_in": spec.d_in,
        "noise_sigma": spec.noise_sigma,
        "offset_scale": spec.offset_scale,
        "attribute_names": list(spec.attribute_names),
        "subgroups": [
            {"key": list(s.key.values), "n": s.n, "prevalence": s.prevalence, "separation": s.separation,
             "atypical": s.atypical}
            for s in spec.subgroups
        ],
    }


# ─── Field checks ─────────────────────────────────────────────────────────────

def _object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected an object, got {type(value).__name__}", field=path)
    return value


def _known(obj: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise SchemaError(f"unknown key (allowed: {', '.join(sorted(allowed))})", field=where)


def _int(value, path: str, lo: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer, got {value!r}", field=path)
    if lo is not None and value < lo:
        raise SchemaError(f"must be ≥ {lo}, got {value}", field=path)
    return value


def _real(value, path: str, lo: float | None = None, hi: float | None = None, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"expected a finite number, got {value!r}", field=path)
    value = float(value)
    if positive and not value > 0:
        raise SchemaError(f"must be > 0, got {value}", field=path)
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise SchemaError(f"must lie in [{lo}, {hi}], got {value}", field=path)
    return value


def _str(value, path: str, choices=None) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {value!r}", field=path)
    if choices is not None and value not in choices:
        raise SchemaError(f"must be one of {', '.join(choices)}, got {value!r}", field=path)
    return value


def _list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"expected a list, got {type(value).__name__}", field=path)
    return value


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(f"expected true or false, got {value!r}", field=path)
    return value


def _build(path: str, factory, **kwargs):
    """Run a domain constructor, re-raising its validation error under `path`."""
    try:
        return factory(**kwargs)
    except SchemaError:
        raise
    except (InputError, ValueError) as exc:
        raise SchemaError(str(exc), field=path) from exc


# ─── Section parsers ──────────────────────────────────────────────────────────

def parse_cohort(doc, path: str = "cohort") -> CohortConfig:
    obj = _object(doc, path)
    if "preset" in obj:
        _known(obj, {"preset", "seed"}, path)
        preset = _str(obj["preset"], f"{path}.preset", PRESET_NAMES)
        seed = _int(obj.get("seed", 2024), f"{path}.seed", lo=0)
        return CohortConfig(preset_spec(preset, seed), preset)

    allowed = {"name", "subgroups", "attribute_names", "d_in", "noise_sigma", "offset_scale", "seed", "direction_seed"}
    _known(obj, allowed, path)
    if "subgroups" not in obj:
        raise SchemaError("missing (give either 'preset' or 'subgroups')", field=f"{path}.subgroups")
    attrs = [_str(a, f"{path}.attribute_names[{i}]") for i, a in
             enumerate(_list(obj.get("attribute_names", ["gender", "age"]), f"{path}.attribute_names"))]
    if not 1 <= len(attrs) <= 3:
        raise SchemaError("between 1 and 3 attributes are supported", field=f"{path}.attribute_names")

    subgroups = []
    for i, raw in enumerate(_list(obj["subgroups"], f"{path}.subgroups")):
        sp = f"{path}.subgroups[{i}]"
        sub = _object(raw, sp)
        _known(sub, {"key", "n", "prevalence", "separation", "atypical"}, sp)
        for required in ("key", "n", "prevalence", "separation"):
            if required not in sub:
                raise SchemaError("missing", field=f"{sp}.{required}")
        key = [_str(v, f"{sp}.key[{j}]") for j, v in enumerate(_list(sub["key"], f"{sp}.key"))]
        if len(key) != len(attrs):
            raise SchemaError(f"expected {len(attrs)} attribute values", field=f"{sp}.key")
        subgroups.append(_build(
            sp, SubgroupSpec,
            key=SubgroupKey(tuple(key)),
            n=_int(sub["n"], f"{sp}.n", lo=0),
            prevalence=_real(sub["prevalence"], f"{sp}.prevalence", lo=0.0, hi=1.0),
            separation=_real(sub["separation"], f"{sp}.separation", lo=0.0),
            atypical=_real(sub.get("atypical", 0.0), f"{sp}.atypical", lo=0.0),
        ))

    direction_seed = obj.get("direction_seed")
    spec = _build(
        path, CohortSpec,
        subgroups=tuple(subgroups),
        attribute_names=tuple(attrs),
        d_in=_int(obj.get("d_in", 16), f"{path}.d_in", lo=1),
        noise_sigma=_real(obj.get("noise_sigma", 1.0), f"{path}.noise_sigma", positive=True),
        offset_scale=_real(obj.get("offset_scale", 0.5), f"{path}.offset_scale", lo=0.0),
        seed=_int(obj.get("seed", 0), f"{path}.seed", lo=0),
        name=_str(obj.get("name", "custom"), f"{path}.name"),
        direction_seed=None if direction_seed is None else _int(direction_seed, f"{path}.direction_seed", lo=0),
    )
    return CohortConfig(spec)


def parse_split(doc, path: str = "split") -> SplitConfig:
    obj = _object(doc, path)
    _known(obj, {"fractions", "seed"}, path)
    fractions = _list(obj.get("fractions", list(DEFAULT_FRACTIONS)), f"{path}.fractions")
    if len(fractions) != 3:
        raise SchemaError("expected three fractions (train, val, test)", field=f"{path}.fractions")
    fr = tuple(_real(f, f"{path}.fractions[{i}]", lo=0.0, hi=1.0) for i, f in enumerate(fractions))
    if abs(sum(fr) - 1.0) > 1e-9:
        raise SchemaError(f"fractions must sum to 1, got {sum(fr)}", field=f"{path}.fractions")
    return SplitConfig(fr, _int(obj.get("seed", 0), f"{path}.seed", lo=0))


def parse_train(doc, path: str = "train") -> TrainConfig:
    obj = _object(doc, path)
    names = {f.name for f in fields(TrainConfig)}
    _known(obj, names, path)
    kw: dict[str, Any] = {}
    for name in ("epochs", "batch_size", "d_emb", "min_subgroup_batch"):
        if name in obj:
            kw[name] = _int(obj[name], f"{path}.{name}", lo=1)
    if "seed" in obj:
        kw["seed"] = _int(obj["seed"], f"{path}.seed", lo=0)
    for name in ("learning_rate", "temperature"):
        if name in obj:
            kw[name] = _real(obj[name], f"{path}.{name}", positive=True)
    for name in ("weight_decay", "lambda_cmac"):
        if name in obj:
            kw[name] = _real(obj[name], f"{path}.{name}", lo=0.0)
    if "mode" in obj:
        kw["mode"] = _str(obj["mode"], f"{path}.mode", MODES)
    if "kernel" in obj:
        kp = f"{path}.kernel"
        kernel = _object(obj["kernel"], kp)
        _known(kernel, {"bandwidth_mode", "bandwidth"}, kp)
        mode = _str(kernel.get("bandwidth_mode", "median"), f"{kp}.bandwidth_mode", ("median", "fixed"))
        h = kernel.get("bandwidth")
        kw["kernel"] = _build(kp, KernelConfig, bandwidth_mode=mode,
                              bandwidth=None if h is None else _real(h, f"{kp}.bandwidth", positive=True))
    return _build(path, TrainConfig, **kw)


def parse_eval(doc, path: str = "eval") -> EvalConfig:
    obj = _object(doc, path)
    _known(obj, {f.name for f in fields(EvalConfig)}, path)
    kw: dict[str, Any] = {}
    if "threshold" in obj:
        kw["threshold"] = _real(obj["threshold"], f"{path}.threshold", lo=0.0, hi=1.0)
    if "zone" in obj:
        zone = _list(obj["zone"], f"{path}.zone")
        if len(zone) != 2:
            raise SchemaError("expected [lo, hi]", field=f"{path}.zone")
        kw["zone"] = tuple(_real(z, f"{path}.zone[{i}]", lo=0.0, hi=1.0) for i, z in enumerate(zone))
    for name in ("epsilon", "gamma"):
        if name in obj:
            kw[name] = _real(obj[name], f"{path}.{name}", lo=0.0)
    if "alpha" in obj:
        kw["alpha"] = _real(obj["alpha"], f"{path}.alpha", lo=0.0, hi=1.0)
    if "kde_bandwidth" in obj:
        h = obj["kde_bandwidth"]
        kw["kde_bandwidth"] = _str(h, f"{path}.kde_bandwidth", ("silverman",)) if isinstance(h, str) \
            else _real(h, f"{path}.kde_bandwidth", positive=True)
    if "positive_class" in obj:
        kw["positive_class"] = _int(obj["positive_class"], f"{path}.positive_class", lo=0)
    cfg = EvalConfig(**kw)
    _build(path, cfg.settings)
    return cfg


def parse_bootstrap(doc, path: str = "bootstrap") -> BootstrapConfig | None:
    obj = _object(doc, path)
    _known(obj, {"enabled", "n_resamples", "level", "seed", "workers", "retry_cap"}, path)
    if not _bool(obj.get("enabled", True), f"{path}.enabled"):
        return None
    kw: dict[str, Any] = {}
    for name in ("n_resamples", "workers", "retry_cap"):
        if name in obj:
            kw[name] = _int(obj[name], f"{path}.{name}", lo=1)
    if "seed" in obj:
        kw["seed"] = _int(obj["seed"], f"{path}.seed", lo=0)
    if "level" in obj:
        kw["level"] = _real(obj["level"], f"{path}.level", lo=0.0, hi=1.0)
    return _build(path, BootstrapConfig, **kw)


def parse_experiment(doc, path: str = "experiment") -> ExperimentConfig:
    obj = _object(doc, path)
    _known(obj, {f.name for f in fields(ExperimentConfig)}, path)
    kw: dict[str, Any] = {}
    if "seeds" in obj:
        seeds = tuple(_int(s, f"{path}.seeds[{i}]", lo=0) for i, s in enumerate(_list(obj["seeds"], f"{path}.seeds")))
        if not seeds or len(set(seeds)) != len(seeds):
            raise SchemaError("seeds must be a non-empty list without repeats", field=f"{path}.seeds")
        kw["seeds"] = seeds
    if "modes" in obj:
        modes = tuple(_str(m, f"{path}.modes[{i}]", MODES) for i, m in enumerate(_list(obj["modes"], f"{path}.modes")))
        if not modes or len(set(modes)) != len(modes):
            raise SchemaError("modes must be a non-empty list without repeats", field=f"{path}.modes")
        kw["modes"] = modes
    if "lambda_sweep" in obj:
        kw["lambda_sweep"] = tuple(
            _real(v, f"{path}.lambda_sweep[{i}]", lo=0.0) for i, v in enumerate(_list(obj["lambda_sweep"], f"{path}.lambda_sweep"))
        )
    if obj.get("external_preset") is not None:
        kw["external_preset"] = _str(obj["external_preset"], f"{path}.external_preset", PRESET_NAMES)
    for name in ("zero_shot", "plots"):
        if name in obj:
            kw[name] = _bool(obj[name], f"{path}.{name}")
    if "auc_margin" in obj:
        kw["auc_margin"] = _real(obj["auc_margin"], f"{path}.auc_margin", lo=0.0)
    if "significance" in obj:
        kw["significance"] = _real(obj["significance"], f"{path}.significance", lo=0.0, hi=1.0)
    return ExperimentConfig(**kw)


# ─── Documents ────────────────────────────────────────────────────────────────

_SECTIONS = {
    "split": ("split", parse_split),
    "train": ("train", parse_train),
    "eval": ("eval", parse_eval),
    "bootstrap": ("bootstrap", parse_bootstrap),
    "experiment": ("experiment", parse_experiment),
}


def parse_config(doc: Any) -> RunConfig:
    obj = _object(doc, "")
    _known(obj, {"schema_version", "cohort", *_SECTIONS}, "")
    if "schema_version" in obj and obj["schema_version"] != SCHEMA_VERSION:
        raise UnknownSchemaVersion(f"unsupported schema_version {obj['schema_version']!r}", field="schema_version")
    kw: dict[str, Any] = {}
    if "cohort" in obj:
        kw["cohort"] = parse_cohort(obj["cohort"])
    for key, (attr, parser) in _SECTIONS.items():
        if key in obj:
            kw[attr] = parser(obj[key])
    return RunConfig(**kw)


def load_config(path: str | Path | None) -> RunConfig:
    """Read and validate a config file; None gives the all-defaults config."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc.strerror}") from exc
    cfg = parse_config(loads(text, source=str(path)))
    logger.info(f"Loaded config {path}")
    return cfg


def with_overrides(cfg: RunConfig, *, seeds=None, mode=None, lambda_cmac=None, zone=None, bootstrap=None) -> RunConfig:
    """Apply command-line overrides on top of the file config."""
    train = cfg.train
    if mode is not None:
        train = _build("--mode", lambda: replace(train, mode=mode))
    if lambda_cmac is not None:
        train = _build("--lambda", lambda: replace(train, lambda_cmac=lambda_cmac))
    experiment = cfg.experiment
    if seeds is not None:
        experiment = replace(experiment, seeds=tuple(seeds))
    ev = cfg.eval
    if zone is not None:
        ev = replace(ev, zone=tuple(zone))
        _build("--zone", ev.settings)
    boot = cfg.bootstrap
    if bootstrap is not None:
        boot = _build("--bootstrap", lambda: replace(boot or BootstrapConfig(), n_resamples=bootstrap))
    return replace(cfg, train=train, experiment=experiment, eval=ev, bootstrap=boot)
