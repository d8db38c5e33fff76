#!/usr/bin/env python3
"""
pipeline.py — Orchestrator for the five stages:
  1. generate   synthetic cohort → dataset file
  2. train      dataset → checkpoint(s) + loss history
  3. evaluate   checkpoint + dataset, or scored dataset → fairness report (+ KDE/bar data)
  4. compare    two scored datasets (or two reports) → comparison document
  5. experiment all of the above across seeds and modes → summary table

Each stage returns a plain dict describing what it wrote, like the chat
orchestrator's typed turn results; the CLI only prints and maps errors.
"""

import functools
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from cohorts_and_splits.presets import preset_spec
from cohorts_and_splits.splits import stratified_split
from cohorts_and_splits.synthetic import CohortSpec, generate
from fairness_eval.comparison import VerdictRule, compare_reports, compare_scored
from fairness_eval.kde import kde_curve
from fairness_eval.labeled import LabeledScores
from fairness_eval.report import FairnessReport, attach_cis, build_report, metric_vector
from files_and_config import report_io
from files_and_config.checkpoint import load_checkpoint, save_checkpoint
from files_and_config.config import RunConfig
from files_and_config.dataset_io import (
    read_feature_dataset,
    read_scored_dataset,
    write_feature_dataset,
    write_scored_dataset,
)
from files_and_config.plots import plot_kde_curves, plot_subgroup_bars
from shared_utils import canonical_json
from shared_utils.errors import InputError, SchemaError
from stat_inference.bootstrap import bootstrap_vector
from toy_training.encoders import class_text_inputs
from toy_training.trainer import TrainConfig, TrainedModel, evaluate_model, train, zero_shot_model

logger = logging.getLogger(__name__)

SUMMARY_METRICS = ("auc", "delta_tpr", "dpd", "delta_fpr", "mean_deodds", "certainty_gap")


# ─── Helpers ──────────────────────────────────────────────────────────────────

def _is_json_document(path: Path) -> bool:
    """Checkpoints and reports are multi-line JSON; dataset files start with a one-line header."""
    try:
        with path.open("r", encoding="utf-8") as f:
            return f.readline().strip() == "{"
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc


def _document_kind(path: Path) -> str:
    doc = canonical_json.loads(path.read_text(encoding="utf-8"), source=str(path))
    return doc.get("kind", "") if isinstance(doc, dict) else ""


def seeded_path(out: Path, seed: int, many: bool) -> Path:
    return out.with_name(f"{out.stem}_seed{seed}{out.suffix}") if many else out


def cohort_summary(spec: CohortSpec, records) -> list[dict]:
    rows = []
    for sub in spec.subgroups:
        labels = [r.label for r in records if r.subgroup == sub.key]
        rows.append({
            "subgroup": sub.key.label,
            "n": len(labels),
            "positives": int(sum(labels)),
            "prevalence": (sum(labels) / len(labels)) if labels else 0.0,
        })
    return rows


# ─── 1. generate ──────────────────────────────────────────────────────────────

def run_generate(cfg: RunConfig, out_path: str | Path) -> dict:
    cohort = cfg.require_cohort()
    records = generate(cohort.spec)
    write_feature_dataset(out_path, records, cohort.spec.attribute_names, name=cohort.spec.name)
    return {"type": "generate", "path": str(out_path), "rows": len(records),
            "subgroups": cohort_summary(cohort.spec, records)}


# ─── 2. train ─────────────────────────────────────────────────────────────────

def class_texts_for(records, seed: int):
    n_classes = max(2, max(r.label for r in records) + 1)
    return class_text_inputs(n_classes, len(records[0].features), seed)


def fit(records, train_cfg: TrainConfig, progress: bool = False) -> TrainedModel:
    return train(records, class_texts_for(records, train_cfg.seed), train_cfg, progress=progress)


def run_train(dataset_path: str | Path, cfg: RunConfig, out_path: str | Path,
              seeds: Sequence[int] | None = None, progress: bool = False) -> dict:
    records, header = read_feature_dataset(dataset_path)
    if not records:
        raise InputError(f"{dataset_path} has no rows")
    seeds = list(seeds) if seeds else [cfg.train.seed]
    out = Path(out_path)
    written = []
    for seed in seeds:
        model = fit(records, replace(cfg.train, seed=seed), progress=progress)
        path = seeded_path(out, seed, len(seeds) > 1)
        save_checkpoint(path, model, extra={"dataset": header.name})
        written.append({"seed": seed, "checkpoint": str(path),
                        "final_total_loss": model.history[-1].total})
    return {"type": "train", "checkpoints": written}


# ─── 3. evaluate ──────────────────────────────────────────────────────────────

def score(model: TrainedModel, records, positive_class: int = 1) -> LabeledScores:
    return evaluate_model(model, records, positive_class=positive_class)


def kde_curves(data: LabeledScores, bandwidth) -> dict:
    curves = {}
    for i, key in enumerate(data.keys):
        scores = data.scores[data.group_index == i]
        if scores.size:
            curves[key.label] = kde_curve(scores, bandwidth=bandwidth)
    return curves


def report_for(data: LabeledScores, cfg: RunConfig, progress: bool = False) -> FairnessReport:
    settings = cfg.eval.settings()
    report = build_report(data, settings)
    if cfg.bootstrap is not None:
        boot = replace(cfg.bootstrap, progress=progress)
        intervals = bootstrap_vector(functools.partial(metric_vector, settings=settings), data, boot)
        attach_cis(report, intervals)
        report.config["bootstrap"] = {"n_resamples": boot.n_resamples, "level": boot.level, "seed": boot.seed}
    return report


def write_evaluation(data: LabeledScores, cfg: RunConfig, out_path: Path, plots: bool = False,
                     source: dict | None = None, progress: bool = False) -> tuple[FairnessReport, dict]:
    """Report JSON plus KDE and bar-chart CSVs (and SVGs when `plots`) next to it."""
    out_path = Path(out_path)
    report = report_for(data, cfg, progress=progress)
    report.source = source or {}
    curves = kde_curves(data, cfg.eval.kde_bandwidth)
    for label, curve in curves.items():
        if curve.degenerate:
            report.flags.append({"metric": "kde", "subgroup": label, "reason": "bandwidth fell back to 0.01"})

    stem = out_path.with_suffix("")
    written = {
        "report": str(report_io.write_report(out_path, report)),
        "kde": str(report_io.write_kde_csv(f"{stem}_kde.csv", curves)),
        "bars": str(report_io.write_bar_csv(f"{stem}_bars.csv", report)),
    }
    if plots:
        written["bars_svg"] = str(plot_subgroup_bars(report, f"{stem}_bars.svg"))
        written["kde_svg"] = str(plot_kde_curves(curves, f"{stem}_kde.svg", zone=cfg.eval.zone))
    return report, written


def run_evaluate(input_path: str | Path, cfg: RunConfig, out_path: str | Path,
                 dataset_path: str | Path | None = None, plots: bool = False, progress: bool = False) -> dict:
    input_path, out_path = Path(input_path), Path(out_path)
    if _is_json_document(input_path):
        if dataset_path is None:
            raise InputError("evaluating a checkpoint needs --data with the feature dataset to score")
        model = load_checkpoint(input_path)
        records, header = read_feature_dataset(dataset_path)
        data = score(model, records, cfg.eval.positive_class)
        scored_path = out_path.with_name(out_path.stem + "_scored.csv")
        write_scored_dataset(scored_path, data, header.attributes, name=header.name)
        source = {"input": "checkpoint", "rows": len(data)}
    else:
        data, header = read_scored_dataset(input_path)
        scored_path = None
        source = {"input": "scored", "rows": len(data)}
    report, written = write_evaluation(data, cfg, out_path, plots=plots, source=source, progress=progress)
    return {"type": "evaluate", "scored": None if scored_path is None else str(scored_path), **written,
            "aggregate": report.aggregate, "flags": len(report.flags)}


# ─── 4. compare ───────────────────────────────────────────────────────────────

def compare_paths(baseline_path: str | Path, candidate_path: str | Path, cfg: RunConfig) -> dict:
    a, b = Path(baseline_path), Path(candidate_path)
    rule = VerdictRule(cfg.experiment.auc_margin, cfg.experiment.significance)
    json_a, json_b = _is_json_document(a), _is_json_document(b)
    if json_a != json_b:
        raise InputError("compare needs two scored datasets or two reports, not one of each")
    if json_a:
        for p in (a, b):
            if _document_kind(p) != "fairness_report":
                raise SchemaError(f"{p} is not a fairness report", field="kind")
        return compare_reports(report_io.read_report(a), report_io.read_report(b), rule)
    data_a, _ = read_scored_dataset(a)
    data_b, _ = read_scored_dataset(b)
    return compare_scored(data_a, data_b, cfg.eval.settings(), rule)


def run_compare(baseline_path, candidate_path, cfg: RunConfig, out_path: str | Path) -> dict:
    doc = compare_paths(baseline_path, candidate_path, cfg)
    report_io.write_document(out_path, report_io.COMPARISON_KIND, doc)
    return {"type": "compare", "path": str(out_path), "verdict": doc["verdict"],
            "impact_total": doc["impact_formatted"]["Total"]}


# ─── 5. experiment ────────────────────────────────────────────────────────────

def _arms(cfg: RunConfig) -> list[tuple[str, TrainConfig | None]]:
    """(arm name, training config) in run order; None trains nothing (zero-shot)."""
    exp = cfg.experiment
    arms: list[tuple[str, TrainConfig | None]] = []
    if exp.zero_shot:
        arms.append(("zero_shot", None))
    seen = set()
    candidates = [replace(cfg.train, mode=m) for m in exp.modes]
    candidates += [replace(cfg.train, mode="cmac", lambda_cmac=lam) for lam in exp.lambda_sweep]
    for tc in candidates:
        eff = tc.effective()
        key = (eff.mode, eff.lambda_cmac)
        if key in seen:
            logger.warning(f"skipping duplicate arm {eff.mode} λ={eff.lambda_cmac}")
            continue
        seen.add(key)
        if eff.mode == "erm":
            name = "erm"
        elif eff.lambda_cmac == cfg.train.lambda_cmac:
            name = "cmac"
        else:
            name = f"cmac_lambda{eff.lambda_cmac:g}"
        arms.append((name, eff))
    return arms


def t_interval(values: Sequence[float], level: float = 0.95) -> dict:
    """Mean with a Student-t interval over seeds; no interval from a single value."""
    arr = np.asarray([v for v in values if v is not None and math.isfinite(v)], dtype=np.float64)
    if arr.size == 0:
        return {"mean": None, "lo": None, "hi": None, "n": 0}
    mean = float(arr.mean())
    if arr.size < 2:
        return {"mean": mean, "lo": None, "hi": None, "n": 1}
    half = float(stats.t.ppf(0.5 + level / 2, arr.size - 1) * arr.std(ddof=1) / math.sqrt(arr.size))
    return {"mean": mean, "lo": mean - half, "hi": mean + half, "n": int(arr.size)}


def _majority(flags: list[bool]) -> bool:
    return sum(flags) * 2 > len(flags)


def fairness_effect(per_seed: dict, lowest_separation: str) -> dict:
    """Per-seed CMAC vs ERM criteria and their majority verdicts."""
    checks = {"delta_tpr_reduction_25pct": [], "auc_change_within_0.02": [],
              "certainty_gap_lower": [], "zone_fraction_lower": []}
    auc_changes = []
    for seed, arms in sorted(per_seed.items()):
        if "erm" not in arms or "cmac" not in arms:
            continue
        erm, cmac = arms["erm"], arms["cmac"]
        tpr_a, tpr_b = erm.aggregate["delta_tpr"], cmac.aggregate["delta_tpr"]
        checks["delta_tpr_reduction_25pct"].append(
            bool(tpr_a is not None and tpr_b is not None and tpr_a > 0 and (tpr_a - tpr_b) / tpr_a >= 0.25))
        if erm.aggregate["auc"] is not None and cmac.aggregate["auc"] is not None:
            auc_changes.append(cmac.aggregate["auc"] - erm.aggregate["auc"])
        checks["auc_change_within_0.02"].append(bool(auc_changes and auc_changes[-1] >= -0.02))
        gap_a, gap_b = erm.aggregate["certainty_gap"], cmac.aggregate["certainty_gap"]
        checks["certainty_gap_lower"].append(bool(gap_a is not None and gap_b is not None and gap_b < gap_a))
        zone_a = erm.per_subgroup.get(lowest_separation, {}).get("uncertainty_zone_fraction")
        zone_b = cmac.per_subgroup.get(lowest_separation, {}).get("uncertainty_zone_fraction")
        checks["zone_fraction_lower"].append(bool(zone_a is not None and zone_b is not None and zone_b < zone_a))
    return {
        "per_seed": checks,
        "majority": {name: _majority(flags) if flags else None for name, flags in checks.items()},
        "mean_auc_change": None if not auc_changes else float(np.mean(auc_changes)),
        "lowest_separation_subgroup": lowest_separation,
    }


def summarise(per_seed: dict, arms: list[str], lowest_separation: str) -> tuple[dict, pd.DataFrame]:
    rows = []
    for seed, reports in sorted(per_seed.items()):
        for arm in arms:
            if arm not in reports:
                continue
            agg = reports[arm].aggregate
            row = {"arm": arm, "seed": seed}
            row.update({m: agg.get(m) for m in SUMMARY_METRICS})
            row["df_pass"] = agg.get("df_pass")
            row["if_alpha_pass"] = agg.get("if_alpha_pass")
            row["zone_fraction_lowest_separation"] = (
                reports[arm].per_subgroup.get(lowest_separation, {}).get("uncertainty_zone_fraction"))
            rows.append(row)
    table = pd.DataFrame(rows)
    by_arm = {}
    for arm in arms:
        sub = [r for r in rows if r["arm"] == arm]
        if not sub:
            continue
        entry = {m: t_interval([r[m] for r in sub]) for m in (*SUMMARY_METRICS, "zone_fraction_lowest_separation")}
        entry["df_pass_rate"] = float(np.mean([bool(r["df_pass"]) for r in sub]))
        entry["if_alpha_pass_rate"] = float(np.mean([bool(r["if_alpha_pass"]) for r in sub]))
        entry["seeds"] = [r["seed"] for r in sub]
        by_arm[arm] = entry
    return {"rows": rows, "by_arm": by_arm}, table


def run_experiment(cfg: RunConfig, out_dir: str | Path, plots: bool | None = None, progress: bool = False) -> dict:
    cohort = cfg.require_cohort()
    exp = cfg.experiment
    plots = exp.plots if plots is None else plots
    out = Path(out_dir)
    for sub in ("datasets", "checkpoints", "reports", "comparisons"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    spec = cohort.spec
    records = generate(spec)
    attrs = spec.attribute_names
    write_feature_dataset(out / "datasets" / "cohort.csv", records, attrs, name=spec.name)
    train_set, val_set, test_set = stratified_split(records, cfg.split.fractions, cfg.split.seed)
    for name, part in (("train", train_set), ("val", val_set), ("test", test_set)):
        write_feature_dataset(out / "datasets" / f"{name}.csv", part, attrs, name=f"{spec.name}:{name}")
    logger.info(f"Split {len(records)} records into {len(train_set)}/{len(val_set)}/{len(test_set)}")

    external = None
    if exp.external_preset:
        base_seed = spec.seed if spec.direction_seed is None else spec.direction_seed
        ext_spec = preset_spec(exp.external_preset, seed=base_seed)
        if ext_spec.d_in != spec.d_in:
            raise SchemaError(f"external cohort has d_in {ext_spec.d_in}, training cohort {spec.d_in}",
                              field="experiment.external_preset")
        external = generate(ext_spec)
        write_feature_dataset(out / "datasets" / "external.csv", external, ext_spec.attribute_names, name=ext_spec.name)

    lowest_separation = min(spec.subgroups, key=lambda s: (s.separation, s.key)).key.label
    arms = _arms(cfg)
    per_seed: dict[int, dict[str, FairnessReport]] = {}
    per_seed_external: dict[int, dict[str, FairnessReport]] = {}
    for seed in exp.seeds:
        per_seed[seed], per_seed_external[seed] = {}, {}
        for arm, train_cfg in arms:
            run = f"{arm}_seed{seed}"
            if train_cfg is None:
                model = zero_shot_model(len(train_set[0].features), class_texts_for(train_set, seed),
                                        replace(cfg.train, seed=seed))
            else:
                model = fit(train_set, replace(train_cfg, seed=seed), progress=progress)
                save_checkpoint(out / "checkpoints" / f"{run}.json", model, extra={"dataset": spec.name})
            data = score(model, test_set, cfg.eval.positive_class)
            write_scored_dataset(out / "reports" / f"{run}_scored.csv", data, attrs, name=f"{spec.name}:test")
            report, _ = write_evaluation(data, cfg, out / "reports" / f"{run}.json", plots=plots,
                                         source={"arm": arm, "seed": seed, "rows": len(data)}, progress=progress)
            per_seed[seed][arm] = report
            if external is not None:
                ext_data = score(model, external, cfg.eval.positive_class)
                ext_report, _ = write_evaluation(ext_data, cfg, out / "reports" / f"{run}_external.json",
                                                 source={"arm": arm, "seed": seed, "rows": len(ext_data)},
                                                 progress=progress)
                per_seed_external[seed][arm] = ext_report

        if "erm" in per_seed[seed]:
            for arm, _ in arms:
                if arm in ("erm", "zero_shot") or arm not in per_seed[seed]:
                    continue
                run_compare(out / "reports" / f"erm_seed{seed}_scored.csv",
                            out / "reports" / f"{arm}_seed{seed}_scored.csv",
                            cfg, out / "comparisons" / f"erm_vs_{arm}_seed{seed}.json")

    arm_names = [a for a, _ in arms]
    summary, table = summarise(per_seed, arm_names, lowest_separation)
    summary["fairness_effect"] = fairness_effect(per_seed, lowest_separation)
    summary["cohort"] = {"name": spec.name, "rows": len(records), "train": len(train_set),
                         "val": len(val_set), "test": len(test_set)}
    if external is not None:
        summary["external"], _ = summarise(per_seed_external, arm_names, lowest_separation)
    report_io.write_document(out / "summary.json", report_io.SUMMARY_KIND, summary)
    report_io.write_table(out / "summary.csv", table)
    canonical_json.write(out / "config_resolved.json", cfg.echo())
    logger.info(f"Experiment finished: {len(arm_names)} arms × {len(exp.seeds)} seeds → {out}")
    return {"type": "experiment", "dir": str(out), "summary": str(out / "summary.json"),
            "fairness_effect": summary["fairness_effect"]["majority"]}
