"""
checkpoint.py — Trained-model checkpoints as canonical JSON, plus the
per-epoch loss history as a small CSV next to them.
"""

import io
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from embedding_geometry.alignment import ClassPrototypes
from files_and_config.config import parse_train, train_to_dict
from shared_utils import canonical_json
from shared_utils.errors import SchemaError
from toy_training.encoders import Encoders
from toy_training.trainer import EpochLoss, TrainedModel

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "checkpoint"


def checkpoint_dict(model: TrainedModel, extra: dict | None = None) -> dict:
    return {
        "schema_version": canonical_json.SCHEMA_VERSION,
        "kind": CHECKPOINT_KIND,
        "train_config": train_to_dict(model.config),
        "encoders": {
            "image_weights": model.encoders.image_weights.tolist(),
            "text_weights": model.encoders.text_weights.tolist(),
            "temperature": model.encoders.temperature,
        },
        "class_texts": model.class_texts.class_texts.tolist(),
        "history": [
            {"epoch": h.epoch, "clip": h.clip, "cmac": h.cmac, "total": h.total, "batches": h.batches}
            for h in model.history
        ],
        "meta": extra or {},
    }


def history_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_history.csv")


def save_checkpoint(path: str | Path, model: TrainedModel, extra: dict | None = None) -> Path:
    path = Path(path)
    canonical_json.write(path, checkpoint_dict(model, extra))
    frame = pd.DataFrame(
        [(h.epoch, h.clip, h.cmac, h.total, h.batches) for h in model.history],
        columns=["epoch", "clip_loss", "cmac_loss", "total_loss", "batches"],
    )
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    history_path(path).write_text(buf.getvalue(), encoding="utf-8")
    logger.info(f"Saved checkpoint {path} ({len(model.history)} epochs)")
    return path


def load_checkpoint(path: str | Path) -> TrainedModel:
    doc = canonical_json.read_versioned(path, CHECKPOINT_KIND)
    try:
        enc = doc["encoders"]
        encoders = Encoders(
            np.asarray(enc["image_weights"], dtype=np.float64),
            np.asarray(enc["text_weights"], dtype=np.float64),
            float(enc["temperature"]),
        )
        class_texts = ClassPrototypes(np.asarray(doc["class_texts"], dtype=np.float64))
        config = parse_train(doc["train_config"], path="train_config")
        history = tuple(
            EpochLoss(int(h["epoch"]), float(h["clip"]), float(h["cmac"]), float(h["total"]), int(h["batches"]))
            for h in doc["history"]
        )
    except KeyError as exc:
        raise SchemaError(f"{path}: checkpoint is missing {exc.args[0]!r}", field=str(exc.args[0])) from exc
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed checkpoint: {exc}") from exc
    return TrainedModel(encoders, class_texts, config, history)
