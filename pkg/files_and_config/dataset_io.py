"""
dataset_io.py — Delimited dataset files with a one-line JSON header.

Line 1 is a JSON object declaring the column roles:

  {"columns": {"attributes": [...], "features": [...], "id": "id", "label": "label"},
   "kind": "features", "name": "derm6", "schema_version": 1}

Scored files use kind "scored" with "score" (and optionally "predicted")
instead of "features". The rest of the file is CSV with a header row.
Floats are written with 17 significant digits so values survive a round trip.
"""

import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from cohorts_and_splits.synthetic import SampleRecord
from fairness_eval.labeled import LabeledScores
from shared_utils.canonical_json import SCHEMA_VERSION
from shared_utils.errors import SchemaError, UnknownSchemaVersion
from shared_utils.subgroups import SubgroupKey

logger = logging.getLogger(__name__)

KINDS = ("features", "scored")
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class DatasetHeader:
    kind: str
    attributes: tuple[str, ...]
    features: tuple[str, ...] = ()
    id: str = "id"
    label: str = "label"
    score: str | None = None
    predicted: str | None = None
    name: str = ""

    def to_line(self) -> str:
        columns: dict = {"id": self.id, "label": self.label, "attributes": list(self.attributes)}
        if self.kind == "features":
            columns["features"] = list(self.features)
        else:
            columns["score"] = self.score
            if self.predicted:
                columns["predicted"] = self.predicted
        doc = {"schema_version": SCHEMA_VERSION, "kind": self.kind, "name": self.name, "columns": columns}
        return json.dumps(doc, sort_keys=True, separators=(", ", ": "))

    @classmethod
    def from_line(cls, line: str, source: str) -> "DatasetHeader":
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{source}: header is not JSON ({exc.msg})", line=1) from exc
        if not isinstance(doc, dict) or not isinstance(doc.get("columns"), dict):
            raise SchemaError(f"{source}: header must hold a 'columns' object", field="columns", line=1)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise UnknownSchemaVersion(f"{source}: unsupported schema_version {doc.get('schema_version')!r}",
                                       field="schema_version", line=1)
        kind = doc.get("kind")
        if kind not in KINDS:
            raise SchemaError(f"{source}: kind must be one of {KINDS}, got {kind!r}", field="kind", line=1)
        cols = doc["columns"]
        attributes = cols.get("attributes")
        if not isinstance(attributes, list) or not 1 <= len(attributes) <= 3:
            raise SchemaError(f"{source}: 1 to 3 attribute columns required", field="columns.attributes", line=1)
        if kind == "features" and not cols.get("features"):
            raise SchemaError(f"{source}: a features dataset must declare feature columns",
                              field="columns.features", line=1)
        if kind == "scored" and not cols.get("score"):
            raise SchemaError(f"{source}: a scored dataset must declare a score column", field="columns.score", line=1)
        return cls(
            kind=kind,
            attributes=tuple(attributes),
            features=tuple(cols.get("features") or ()),
            id=cols.get("id", "id"),
            label=cols.get("label", "label"),
            score=cols.get("score"),
            predicted=cols.get("predicted"),
            name=str(doc.get("name", "")),
        )

    @property
    def declared(self) -> list[str]:
        cols = [self.id, *self.attributes, self.label, *self.features]
        cols += [c for c in (self.score, self.predicted) if c]
        return cols


# ─── Writing ──────────────────────────────────────────────────────────────────

def _write(path: str | Path, header: DatasetHeader, frame: pd.DataFrame) -> None:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    Path(path).write_text(header.to_line() + "\n" + buf.getvalue(), encoding="utf-8")


def write_feature_dataset(path, records: Sequence[SampleRecord], attribute_names: Sequence[str], name: str = "") -> None:
    d_in = len(records[0].features) if records else 0
    features = [f"f{k}" for k in range(d_in)]
    header = DatasetHeader("features", tuple(attribute_names), tuple(features), name=name)
    frame = pd.DataFrame({"id": [r.id for r in records]})
    for a, attr in enumerate(attribute_names):
        frame[attr] = [r.subgroup.values[a] for r in records]
    frame["label"] = [r.label for r in records]
    matrix = np.stack([r.features for r in records]) if records else np.empty((0, 0))
    frame = pd.concat([frame, pd.DataFrame(matrix, columns=features)], axis=1)
    _write(path, header, frame)
    logger.info(f"Wrote {len(records)} feature rows to {path}")


def write_scored_dataset(path, data: LabeledScores, attribute_names: Sequence[str], name: str = "") -> None:
    header = DatasetHeader(
        "scored", tuple(attribute_names), score="score",
        predicted="predicted" if data.predicted is not None else None, name=name,
    )
    frame = pd.DataFrame({"id": data.ids})
    subgroups = data.subgroups
    for a, attr in enumerate(attribute_names):
        frame[attr] = [g.values[a] for g in subgroups]
    frame["label"] = data.labels
    frame["score"] = data.scores
    if data.predicted is not None:
        frame["predicted"] = data.predicted
    _write(path, header, frame)
    logger.info(f"Wrote {len(data)} scored rows to {path}")


# ─── Reading ──────────────────────────────────────────────────────────────────

def read_header(path: str | Path) -> DatasetHeader:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            first = f.readline()
    except OSError as exc:
        raise SchemaError(f"cannot read dataset {path}: {exc.strerror}") from exc
    return DatasetHeader.from_line(first, str(path))


def _read_frame(path: Path, header: DatasetHeader) -> pd.DataFrame:
    frame = pd.read_csv(
        path,
        skiprows=1,
        dtype={a: str for a in header.attributes},
        keep_default_na=False,
        na_values=[""],
        float_precision="round_trip",
    )
    missing = [c for c in header.declared if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: declared columns missing from the table: {missing}", field="columns")
    if frame[header.id].duplicated().any():
        dup = frame.loc[frame[header.id].duplicated(), header.id].iloc[0]
        raise SchemaError(f"{path}: duplicate id {dup}", field=header.id)
    nulls = frame[list(header.attributes)].isna().any(axis=1)
    if nulls.any():
        row = int(np.flatnonzero(nulls.to_numpy())[0])
        raise SchemaError(f"{path}: empty attribute value", field=header.attributes[0], line=row + 3)
    for col in (header.id, header.label):
        if not pd.api.types.is_integer_dtype(frame[col]):
            raise SchemaError(f"{path}: column must hold integers", field=col)
    return frame


def _subgroups(frame: pd.DataFrame, header: DatasetHeader) -> list[SubgroupKey]:
    values = frame[list(header.attributes)].to_numpy(dtype=str)
    return [SubgroupKey(tuple(row)) for row in values]


def read_feature_dataset(path: str | Path) -> tuple[list[SampleRecord], DatasetHeader]:
    path = Path(path)
    header = read_header(path)
    if header.kind != "features":
        raise SchemaError(f"{path}: expected a features dataset, got {header.kind!r}", field="kind")
    frame = _read_frame(path, header)
    matrix = frame[list(header.features)].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise SchemaError(f"{path}: feature values must be finite numbers", field="features")
    labels = frame[header.label].to_numpy()
    if labels.size and labels.min() < 0:
        raise SchemaError(f"{path}: labels must be non-negative class indices", field=header.label)
    records = [
        SampleRecord(id=int(i), features=x, label=int(y), subgroup=g)
        for i, x, y, g in zip(frame[header.id].to_numpy(), matrix, labels, _subgroups(frame, header))
    ]
    logger.info(f"Read {len(records)} feature rows from {path}")
    return records, header


def read_scored_dataset(path: str | Path) -> tuple[LabeledScores, DatasetHeader]:
    path = Path(path)
    header = read_header(path)
    if header.kind != "scored":
        raise SchemaError(f"{path}: expected a scored dataset, got {header.kind!r}", field="kind")
    frame = _read_frame(path, header)
    try:
        data = LabeledScores.from_rows(
            ids=frame[header.id].to_numpy(),
            subgroups=_subgroups(frame, header),
            labels=frame[header.label].to_numpy(),
            scores=frame[header.score].to_numpy(dtype=np.float64),
            predicted=None if not header.predicted else frame[header.predicted].to_numpy(),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    logger.info(f"Read {len(data)} scored rows from {path}")
    return data, header
