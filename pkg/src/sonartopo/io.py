"""Array, cloud and diagram file formats.

Binary arrays are little-endian float32 ("f32") or interleaved float32
complex pairs ("c64"), row-major, one row per look angle, next to a JSON
sidecar named ``<payload>.json``::

    {"rows": 360, "cols": 1000, "dtype": "f32", "angular_units": "deg", "range_bin_m": null}

CSV arrays need a header row. Real columns are named freely (``c0, c1, ...``
on write); complex data uses ``re0, im0, re1, im1, ...``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DomainDescriptor, DomainError, PointCloud, SignalMap
from .persistence import PersistenceDiagram

SIDECAR_KEYS = {"rows", "cols", "dtype", "angular_units", "range_bin_m"}
BINARY_SUFFIXES = (".bin", ".f32", ".c64", ".raw")


class FormatError(DomainError):
    """A file could not be parsed; the message names where."""


class ShapeError(FormatError):
    """Declared and actual array shapes disagree."""


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def _read_sidecar(path: Path) -> dict:
    sc = sidecar_path(path)
    if not sc.exists():
        raise FormatError(f"{path}: missing sidecar header {sc.name}")
    try:
        meta = json.loads(sc.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{sc}: invalid JSON at char {exc.pos}: {exc.msg}") from None
    if not isinstance(meta, dict):
        raise FormatError(f"{sc}: header must be a JSON object")
    missing = {"rows", "cols", "dtype"} - meta.keys()
    if missing:
        raise FormatError(f"{sc}: header lacks {sorted(missing)}")
    extra = meta.keys() - SIDECAR_KEYS
    if extra:
        raise FormatError(f"{sc}: unknown header keys {sorted(extra)}")
    for k in ("rows", "cols"):
        if not isinstance(meta[k], int) or meta[k] < 1:
            raise FormatError(f"{sc}: {k} must be a positive integer, got {meta[k]!r}")
    if meta["dtype"] not in ("f32", "c64"):
        raise FormatError(f"{sc}: dtype must be 'f32' or 'c64', got {meta['dtype']!r}")
    if meta.get("angular_units", "deg") != "deg":
        raise FormatError(f"{sc}: angular_units must be 'deg'")
    rb = meta.get("range_bin_m")
    if rb is not None and not (isinstance(rb, (int, float)) and rb > 0):
        raise FormatError(f"{sc}: range_bin_m must be positive or null")
    return meta


def read_binary(path) -> SignalMap:
    path = Path(path)
    meta = _read_sidecar(path)
    rows, cols = meta["rows"], meta["cols"]
    per = 2 if meta["dtype"] == "c64" else 1
    raw = path.read_bytes()
    expected = rows * cols * per * 4
    if len(raw) != expected:
        got_rows = len(raw) / (cols * per * 4)
        raise ShapeError(
            f"{path}: header declares rows={rows}, cols={cols} ({expected} bytes) but the payload has "
            f"{len(raw)} bytes ({got_rows:g} rows); data ends at byte offset {len(raw)}"
        )
    a = np.frombuffer(raw, dtype="<f4")
    bad = np.nonzero(~np.isfinite(a))[0]
    if bad.size:
        k = int(bad[0])
        r, rest = divmod(k // per, cols)
        raise FormatError(f"{path}: non-finite value at byte offset {4 * k} (row {r}, column {rest})")
    a = a.astype(np.float64).reshape(rows, cols * per)
    if per == 2:
        a = a[:, 0::2] + 1j * a[:, 1::2]
    return SignalMap(DomainDescriptor.circle(rows), a, meta.get("range_bin_m"))


def write_binary(smap: SignalMap, path) -> None:
    """Write float32 payload plus sidecar; values are rounded to float32."""
    path = Path(path)
    s = smap.samples
    if smap.is_complex:
        out = np.empty((s.shape[0], 2 * s.shape[1]), dtype="<f4")
        out[:, 0::2] = s.real
        out[:, 1::2] = s.imag
        dtype = "c64"
    else:
        out = s.astype("<f4")
        dtype = "f32"
    path.write_bytes(out.tobytes())
    meta = {
        "rows": int(s.shape[0]),
        "cols": int(s.shape[1]),
        "dtype": dtype,
        "angular_units": "deg",
        "range_bin_m": smap.range_bin_m,
    }
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def _numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv_array(path) -> SignalMap:
    path = Path(path)
    text = path.read_text()
    if ";" in text:
        raise FormatError(f"{path}: semicolons are not allowed; use ',' separators and '.' decimals")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if _numeric(header[0]):
        raise FormatError(f"{path}: a header row is required (first row looks numeric)")
    cplx = len(header) % 2 == 0 and all(
        header[i] == f"re{i // 2}" and header[i + 1] == f"im{i // 2}" for i in range(0, len(header), 2)
    )
    body = rows[1:]
    if len(body) < 2:
        raise ShapeError(f"{path}: need at least 2 data rows, got {len(body)}")
    data = np.empty((len(body), len(header)))
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise ShapeError(f"{path}: line {i + 2} has {len(r)} cells, header has {len(header)}")
        for j, cell in enumerate(r):
            try:
                v = float(cell)
            except ValueError:
                raise FormatError(f"{path}: cell (line {i + 2}, column {j + 1}) is not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise FormatError(f"{path}: cell (line {i + 2}, column {j + 1}) is not finite: {cell!r}")
            data[i, j] = v
    if cplx:
        data = data[:, 0::2] + 1j * data[:, 1::2]
    return SignalMap(DomainDescriptor.circle(len(body)), data)


def write_csv_array(smap: SignalMap, path) -> None:
    s = smap.samples
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if smap.is_complex:
            w.writerow([f"{p}{j}" for j in range(s.shape[1]) for p in ("re", "im")])
            for row in s:
                w.writerow([_fmt(v) for z in row for v in (z.real, z.imag)])
        else:
            w.writerow([f"c{j}" for j in range(s.shape[1])])
            for row in s:
                w.writerow([_fmt(v) for v in row])


def ingest_array(path) -> SignalMap:
    """Read a lab-style array from CSV or binary+sidecar, chosen by file suffix."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: file not found")
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return read_csv_array(path)
    if suffix in BINARY_SUFFIXES:
        return read_binary(path)
    raise FormatError(f"{path}: unknown format (expected .csv or one of {BINARY_SUFFIXES})")


def write_array(smap: SignalMap, path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        write_csv_array(smap, path)
    elif suffix in BINARY_SUFFIXES:
        write_binary(smap, path)
    else:
        raise FormatError(f"{path}: unknown format (expected .csv or one of {BINARY_SUFFIXES})")


def write_cloud(cloud: PointCloud, path) -> None:
    """Points with their labels in the leading column(s)."""
    lab = cloud.labels
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        lab_cols = [] if lab is None else (["label"] if lab.ndim == 1 else [f"label{j}" for j in range(lab.shape[1])])
        w.writerow(lab_cols + [f"x{j}" for j in range(cloud.ambient_dim)])
        for i, p in enumerate(cloud.points):
            lead = [] if lab is None else [_fmt(v) for v in np.atleast_1d(lab[i])]
            w.writerow(lead + [_fmt(v) for v in p])


def read_cloud(path) -> PointCloud:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: file not found")
    rows = [r for r in csv.reader(io.StringIO(path.read_text())) if r]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = rows[0]
    n_lab = sum(1 for h in header if h.startswith("label"))
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ShapeError(f"{path}: every row must have {len(header)} cells")
    labels = None
    if n_lab == 1:
        labels = data[:, 0]
    elif n_lab > 1:
        labels = data[:, :n_lab]
    return PointCloud(data[:, n_lab:], labels)


def write_diagram(diag: PersistenceDiagram, path) -> None:
    Path(path).write_text(diag.to_csv())


def read_diagram(path, max_eps: float = math.inf) -> PersistenceDiagram:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: file not found")
    return PersistenceDiagram.from_csv(path.read_text(), max_eps)


__all__ = [
    "FormatError",
    "ShapeError",
    "ingest_array",
    "write_array",
    "read_binary",
    "write_binary",
    "read_csv_array",
    "write_csv_array",
    "write_cloud",
    "read_cloud",
    "write_diagram",
    "read_diagram",
    "sidecar_path",
]
