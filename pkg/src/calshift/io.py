"""Prediction files (CSV / JSONL) and the versioned JSON report document."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import LabeledSet, PredictionSet, validate_predictions
from .errors import InputError, NonSimplexRow, ParseError, SchemaError

SCHEMA_VERSION = "calshift/1"


def detect_format(path, fmt=None) -> str:
    if fmt:
        fmt = fmt.lower()
        if fmt not in ("csv", "jsonl"):
            raise InputError(f"unknown file format {fmt!r}")
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    return "jsonl" if ext in (".jsonl", ".ndjson", ".json") else "csv"


def _prob_columns(header):
    probs = [h for h in header if h.startswith("prob_")]
    extra = [h for h in header if h not in probs and h != "label"]
    if extra:
        raise SchemaError(f"unexpected columns: {extra}")
    expected = [f"prob_{i}" for i in range(len(probs))]
    if probs != expected:
        raise SchemaError(f"probability columns must be {expected}, got {probs}")
    if len(probs) < 2:
        raise SchemaError("need at least two probability columns")
    return len(probs)


def _to_int_label(value, line):
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"label {value!r} is not an integer", line) from None
    if not np.isfinite(f) or f != int(f):
        raise ParseError(f"label {value!r} is not an integer", line)
    return int(f)


def _read_csv(path):
    rows, labels, lines = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        k = _prob_columns(header)
        cols = [header.index(f"prob_{i}") for i in range(k)]
        lab = header.index("label") if "label" in header else None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            try:
                rows.append([float(row[c]) for c in cols])
            except ValueError as exc:
                raise ParseError(str(exc), line) from None
            if lab is not None:
                if row[lab].strip() == "":
                    raise ParseError("missing label", line)
                labels.append(_to_int_label(row[lab], line))
            lines.append(line)
    return rows, (labels if lab is not None else None), lines


def _read_jsonl(path):
    rows, labels, lines = [], [], []
    k = None
    has_label = None
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, line) from None
            if not isinstance(obj, dict) or "probs" not in obj:
                raise SchemaError(f"line {line}: each row needs a 'probs' array")
            extra = set(obj) - {"probs", "label"}
            if extra:
                raise SchemaError(f"line {line}: unexpected keys {sorted(extra)}")
            probs = obj["probs"]
            if not isinstance(probs, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in probs
            ):
                raise ParseError("'probs' must be an array of numbers", line)
            if k is None:
                k = len(probs)
            elif len(probs) != k:
                raise SchemaError(f"line {line}: expected {k} probabilities, got {len(probs)}")
            present = "label" in obj
            if has_label is None:
                has_label = present
            elif present != has_label:
                raise SchemaError(f"line {line}: label must be present on all rows or none")
            rows.append([float(v) for v in probs])
            if present:
                labels.append(_to_int_label(obj["label"], line))
            lines.append(line)
    if k is not None and k < 2:
        raise SchemaError("need at least two probabilities per row")
    return rows, (labels if has_label else None), lines


def parse_prediction_file(path, fmt=None) -> Union[PredictionSet, LabeledSet]:
    """Read a prediction file, keeping row order.

    Returns a :class:`LabeledSet` when a label column is present and a
    :class:`PredictionSet` otherwise.
    """
    fmt = detect_format(path, fmt)
    try:
        rows, labels, lines = (_read_csv if fmt == "csv" else _read_jsonl)(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParseError("no data rows")
    try:
        preds = validate_predictions(np.array(rows))
    except NonSimplexRow as exc:
        raise ParseError(str(exc), lines[exc.row]) from None
    if labels is None:
        return preds
    labels = np.array(labels, dtype=np.int64)
    bad = np.flatnonzero((labels < 0) | (labels >= preds.k))
    if bad.size:
        raise ParseError(f"label {labels[bad[0]]} outside 0..{preds.k - 1}", lines[bad[0]])
    return LabeledSet(preds, labels)


def write_prediction_file(path, data, fmt=None) -> None:
    """Write predictions (and labels, if any) losslessly."""
    fmt = detect_format(path, fmt)
    preds = data.preds if isinstance(data, LabeledSet) else data
    labels = data.labels if isinstance(data, LabeledSet) else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            header = [f"prob_{i}" for i in range(preds.k)]
            w.writerow(header + (["label"] if labels is not None else []))
            for i, row in enumerate(preds.probs):
                fields = [repr(float(v)) for v in row]
                if labels is not None:
                    fields.append(str(int(labels[i])))
                w.writerow(fields)
        else:
            for i, row in enumerate(preds.probs):
                obj = {"probs": [float(v) for v in row]}
                if labels is not None:
                    obj["label"] = int(labels[i])
                fh.write(json.dumps(obj) + "\n")


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _check_finite(obj, where="report"):
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise InputError(f"non-finite value in {where}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{where}[{i}]")


@dataclass
class ReportDocument:
    """Versioned JSON document emitted by every command."""

    command: list
    result: dict
    schema_version: str = SCHEMA_VERSION
    timing: dict = field(default=None)

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "command": list(self.command)}
        out["result"] = self.result
        if self.timing is not None:
            out["timing"] = self.timing
        return out

    def to_json(self) -> str:
        d = self.to_dict()
        _check_finite(d)
        return json.dumps(d, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(d["command"], d["result"], d["schema_version"], d.get("timing"))
