#!/usr/bin/env python3
"""
cmac_cli.py — Command-line entry point.

Usage examples:
  python cmac_cli.py generate   --config configs/derm6_default.json --out cohort.csv
  python cmac_cli.py train      --data cohort.csv --config configs/derm6_default.json \
                                --out ckpt.json --seeds 1,2,3 --mode cmac --lambda 0.5
  python cmac_cli.py evaluate   ckpt.json --data test.csv --out report.json --zone 0.4,0.6 --bootstrap 1000
  python cmac_cli.py compare    erm_scored.csv cmac_scored.csv --out comparison.json
  python cmac_cli.py experiment --config configs/derm6_default.json --out runs/derm6

Exit codes: 0 success, 2 input/schema error, 3 numerical failure, 4 pairing mismatch.
"""

import argparse
import json
import logging
import sys

import pipeline
from files_and_config.config import load_config, with_overrides
from shared_utils.errors import NonFiniteLoss, PairingMismatch, SchemaError, exit_code_for
from shared_utils.log_setup import configure_logging

logger = logging.getLogger("cmac_cli")


# ─────────────────── Argument parsing ───────────────────
def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _zone(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmac_cli", description="CMAC-MMD fairness toolkit")
    p.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default: $CMAC_LOG_LEVEL or INFO)")
    p.add_argument("--progress", action="store_true", help="show progress bars on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic cohort dataset")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train dual encoders, one checkpoint per seed")
    t.add_argument("--data", required=True)
    t.add_argument("--config", default=None)
    t.add_argument("--out", required=True)
    t.add_argument("--seeds", type=_int_list, default=None)
    t.add_argument("--mode", choices=("erm", "cmac"), default=None)
    t.add_argument("--lambda", dest="lambda_cmac", type=float, default=None)

    e = sub.add_parser("evaluate", help="fairness report for a checkpoint or a scored dataset")
    e.add_argument("input")
    e.add_argument("--data", default=None, help="feature dataset to score when INPUT is a checkpoint")
    e.add_argument("--config", default=None)
    e.add_argument("--out", required=True)
    e.add_argument("--zone", type=_zone, default=None)
    e.add_argument("--bootstrap", type=int, default=None, metavar="N", help="bootstrap CIs with N resamples")
    e.add_argument("--plots", action="store_true", help="also write SVG figures")

    c = sub.add_parser("compare", help="compare a baseline and a candidate on the same samples")
    c.add_argument("baseline")
    c.add_argument("candidate")
    c.add_argument("--config", default=None)
    c.add_argument("--out", required=True)

    x = sub.add_parser("experiment", help="generate → train → evaluate → compare across seeds")
    x.add_argument("--config", required=True)
    x.add_argument("--out", required=True)
    x.add_argument("--seeds", type=_int_list, default=None)
    x.add_argument("--bootstrap", type=int, default=None, metavar="N")
    x.add_argument("--plots", action="store_true", default=None)
    return p


# ─────────────────── Commands ───────────────────
def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, ensure_ascii=False, default=str))


def cmd_generate(args) -> dict:
    result = pipeline.run_generate(load_config(args.config), args.out)
    print(f"{'subgroup':<28} {'n':>6} {'pos':>6} {'prevalence':>11}")
    for row in result["subgroups"]:
        print(f"{row['subgroup']:<28} {row['n']:>6} {row['positives']:>6} {row['prevalence']:>11.3f}")
    print(f"total {result['rows']} rows → {result['path']}")
    return result


def cmd_train(args) -> dict:
    cfg = with_overrides(load_config(args.config), mode=args.mode, lambda_cmac=args.lambda_cmac)
    result = pipeline.run_train(args.data, cfg, args.out, seeds=args.seeds, progress=args.progress)
    _print_json(result)
    return result


def cmd_evaluate(args) -> dict:
    cfg = with_overrides(load_config(args.config), zone=args.zone, bootstrap=args.bootstrap)
    result = pipeline.run_evaluate(args.input, cfg, args.out, dataset_path=args.data,
                                   plots=args.plots, progress=args.progress)
    _print_json(result)
    return result


def cmd_compare(args) -> dict:
    result = pipeline.run_compare(args.baseline, args.candidate, load_config(args.config), args.out)
    _print_json(result)
    return result


def cmd_experiment(args) -> dict:
    cfg = with_overrides(load_config(args.config), seeds=args.seeds, bootstrap=args.bootstrap)
    result = pipeline.run_experiment(cfg, args.out, plots=args.plots, progress=args.progress)
    _print_json(result)
    return result


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        COMMANDS[args.command](args)
    except PairingMismatch as exc:
        logger.error(f"Pairing mismatch: {exc}; first offenders: {exc.offenders}")
        return exit_code_for(exc)
    except NonFiniteLoss as exc:
        logger.error(f"Numerical failure at epoch {exc.epoch}, batch {exc.batch}: {exc}")
        return exit_code_for(exc)
    except SchemaError as exc:
        logger.error(f"Invalid input: {exc}")
        return exit_code_for(exc)
    except (ValueError, ArithmeticError) as exc:
        code = exit_code_for(exc)
        if code == 1:
            raise
        logger.error(f"{type(exc).__name__}: {exc}")
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
