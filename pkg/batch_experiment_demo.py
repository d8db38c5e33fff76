#!/usr/bin/env python3
"""
batch_experiment_demo.py  – Run every config under configs/ through the
experiment pipeline and collect the headline numbers in one text file.

Each config gets its own run directory under runs/; batch_results.txt lists,
per config and arm, the seed-mean AUC, ΔTPR, DPD and certainty gap plus the
majority verdicts of the CMAC-vs-ERM fairness checks.
"""

import datetime
import json
import pathlib

from files_and_config.config import load_config
from pipeline import run_experiment
from shared_utils import canonical_json
from shared_utils.log_setup import configure_logging

# ------------------------------------------------------------------
CONFIG_DIR = pathlib.Path("configs")
RUNS_DIR = pathlib.Path("runs")
OUT_FILE = pathlib.Path("batch_results.txt")
HEADLINE = ("auc", "delta_tpr", "dpd", "certainty_gap")


def _fmt(stat: dict) -> str:
    if stat["mean"] is None:
        return "n/a"
    if stat["lo"] is None:
        return f"{stat['mean']:.3f}"
    return f"{stat['mean']:.3f} [{stat['lo']:.3f}, {stat['hi']:.3f}]"


# ------------------------------------------------------------------
def main() -> None:
    configure_logging()
    configs = sorted(CONFIG_DIR.glob("*.json"))
    print(f"Running {len(configs)} experiment configs …")
    with OUT_FILE.open("w", encoding="utf-8") as f:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        f.write(f"# Batch run @ {timestamp}\n\n")

        for idx, path in enumerate(configs, start=1):
            print(f"[{idx}/{len(configs)}]  {path.name}")
            res = run_experiment(load_config(path), RUNS_DIR / path.stem)
            summary = canonical_json.read_versioned(res["summary"], "experiment_summary")

            f.write(f"## {path.stem}\n\n")
            for arm, entry in summary["by_arm"].items():
                cells = "  ".join(f"{m}={_fmt(entry[m])}" for m in HEADLINE)
                f.write(f"- {arm:<16} {cells}\n")
            f.write("\nCMAC vs ERM (majority of seeds):\n")
            f.write(json.dumps(res["fairness_effect"], indent=2) + "\n\n")
            f.write(f"{'-'*80}\n\n")

    print(f"\nDone!  Results written to {OUT_FILE.resolve()}")


# ------------------------------------------------------------------
if __name__ == "__main__":
    main()
