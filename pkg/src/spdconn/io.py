"""File formats for the command-line workflows.

Time series are delimited text with one row per time point, one column per
region, and region names in the first row.  Fitted models are single JSON
documents with full-precision numbers.  Reports and simulation tables are
delimited text with a header; all files are written atomically.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .estimators import TimeSeries
from .exceptions import InvalidInputError
from .geometry import validate_spd
from .group import TANGENT, GroupModel
from .inference import TestReport

MODEL_SCHEMA_VERSION = 1


def _atomic_write_text(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _detect_delimiter(line: str) -> str | None:
    for candidate in ("\t", ",", ";"):
        if candidate in line:
            return candidate
    return None  # whitespace


def read_time_series(path) -> TimeSeries:
    """Load a delimited time-series table; first row holds region names."""
    path = os.fspath(path)
    with open(path, "r", newline="") as handle:
        content = handle.read()
    lines = [ln for ln in content.splitlines() if ln.strip()]
    if len(lines) < 3:
        raise InvalidInputError(
            f"{path}: need a header row and at least 2 time points"
        )
    delimiter = _detect_delimiter(lines[0])
    if delimiter is None:
        rows = [ln.split() for ln in lines]
    else:
        rows = list(csv.reader(_io.StringIO("\n".join(lines)), delimiter=delimiter))
    names = [c.strip() for c in rows[0]]
    width = len(names)
    values = np.empty((len(rows) - 1, width))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise InvalidInputError(
                f"{path}: row {r} has {len(row)} fields, expected {width}"
            )
        try:
            values[r - 2] = [float(c) for c in row]
        except ValueError as exc:
            raise InvalidInputError(f"{path}: row {r}: {exc}") from None
    try:
        return TimeSeries(values, tuple(names))
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None


def write_model(path, model: GroupModel):
    """Persist the fitted group model as a JSON document.

    Numbers round-trip exactly: JSON floats are written with Python's
    shortest-repr encoding.
    """
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "n": model.n,
        "region_names": list(model.region_names or ()) or None,
        "sigma_star": [float(x) for x in model.mean.ravel()],
        "sigma": float(model.sigma),
        "n_subjects": int(model.n_subjects),
    }
    _atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def read_model(path) -> GroupModel:
    """Load a model document; the stored matrix must pass the SPD check."""
    path = os.fspath(path)
    try:
        with open(path, "r") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON: {exc}") from None
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise InvalidInputError(
            f"{path}: unsupported schema_version {doc.get('schema_version')!r}"
        )
    try:
        n = int(doc["n"])
        values = np.asarray(doc["sigma_star"], dtype=np.float64)
        sigma = float(doc["sigma"])
        n_subjects = int(doc["n_subjects"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}: malformed model document: {exc}") from None
    if values.size != n * n:
        raise InvalidInputError(
            f"{path}: sigma_star has {values.size} values, expected {n * n}"
        )
    mean = validate_spd(values.reshape(n, n))
    names = doc.get("region_names")
    return GroupModel(
        mean=mean,
        sigma=sigma,
        n_subjects=n_subjects,
        parametrization=TANGENT,
        region_names=tuple(names) if names else None,
    )


def format_report(report: TestReport, m: int, seed: int) -> str:
    """Render a test report as commented metadata plus a CSV table."""
    names = report.region_names or tuple(
        f"r{k:02d}" for k in range(max(p.i for p in report.pairs) + 1)
    )
    buf = _io.StringIO()
    buf.write(f"# subject_id: {report.subject_id}\n")
    buf.write(f"# alpha: {report.alpha!r}\n")
    buf.write(f"# m: {m}\n")
    buf.write(f"# seed: {seed}\n")
    buf.write(f"# parametrization: {report.parametrization}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["region_i", "region_j", "t", "p_raw", "p_corrected", "direction"])
    for p in report.pairs:
        writer.writerow(
            [names[p.i], names[p.j], repr(p.t), repr(p.p_raw), repr(p.p_corrected), p.direction]
        )
    return buf.getvalue()


def write_report(path, report: TestReport, m: int, seed: int):
    _atomic_write_text(path, format_report(report, m, seed))


ROC_TABLE_HEADER = (
    "record",
    "parametrization",
    "d_sigma",
    "sigma",
    "n_controls",
    "threshold",
    "fpr",
    "tpr",
    "auc",
)


def format_roc_table(rows) -> str:
    """Render simulation results: curve point rows and AUC summary rows."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROC_TABLE_HEADER)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_roc_table(path, rows):
    _atomic_write_text(path, format_roc_table(rows))
