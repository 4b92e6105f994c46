"""On-disk formats: float-matrix feature/code files, packed binary-code files,
label sidecars, hierarchy snapshots and newline-delimited metrics logs.

Float matrices are stored as 32-bit little-endian values for economy and
promoted to float64 on load; packed codes and hierarchy snapshots roundtrip
bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .clustering import Hierarchy
from .exceptions import DataFormatError

__all__ = [
    "write_float_matrix",
    "read_float_matrix",
    "write_labels",
    "read_labels",
    "write_binary_codes",
    "read_binary_codes",
    "save_hierarchy",
    "load_hierarchy",
    "write_metrics",
    "read_metrics",
]

_FVEC_MAGIC = b"FVEC"
_BVEC_MAGIC = b"BVEC"
_VERSION = 1
_HEADER = "<4sIQQ"


def _read_header(blob: bytes, magic: bytes, path) -> tuple[int, int, int]:
    size = struct.calcsize(_HEADER)
    if len(blob) < size:
        raise DataFormatError(f"{path}: truncated header")
    got_magic, version, rows, cols = struct.unpack(_HEADER, blob[:size])
    if got_magic != magic:
        raise DataFormatError(f"{path}: bad magic {got_magic!r}, expected {magic!r}")
    if version != _VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    return rows, cols, size


def write_float_matrix(path, matrix: np.ndarray) -> None:
    """Header {magic, version, n_rows, n_cols} then row-major float32 LE."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack(_HEADER, _FVEC_MAGIC, _VERSION, *matrix.shape))
        fh.write(matrix.tobytes())


def read_float_matrix(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    rows, cols, offset = _read_header(blob, _FVEC_MAGIC, path)
    expected = rows * cols * 4
    if len(blob) - offset != expected:
        raise DataFormatError(
            f"{path}: payload is {len(blob) - offset} bytes, header implies {expected}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=offset).reshape(rows, cols)
    out = data.astype(np.float64)
    if out.size and not np.all(np.isfinite(out)):
        raise DataFormatError(f"{path}: matrix contains NaN or Inf")
    return out


def write_labels(path, label_sets) -> None:
    """One whitespace-separated list of integer label ids per row."""
    with open(path, "w", encoding="ascii") as fh:
        for labels in label_sets:
            fh.write(" ".join(str(int(lab)) for lab in sorted(labels)))
            fh.write("\n")


def read_labels(path) -> list[set[int]]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            try:
                out.append({int(tok) for tok in line.split()} if line else set())
            except ValueError as exc:
                raise DataFormatError(f"{path}:{line_no}: non-integer label") from exc
    return out


def write_binary_codes(path, packed: np.ndarray, n_bits: int) -> None:
    """Header {magic, version, count, n_bits} then packed little-endian rows."""
    packed = np.ascontiguousarray(np.atleast_2d(packed), dtype=np.uint8)
    expected_width = (int(n_bits) + 7) // 8
    if packed.shape[1] != expected_width:
        raise ValueError(
            f"packed width {packed.shape[1]} does not match n_bits={n_bits}"
        )
    with open(path, "wb") as fh:
        fh.write(struct.pack(_HEADER, _BVEC_MAGIC, _VERSION, packed.shape[0], int(n_bits)))
        fh.write(packed.tobytes())


def read_binary_codes(path) -> tuple[np.ndarray, int]:
    blob = Path(path).read_bytes()
    count, n_bits, offset = _read_header(blob, _BVEC_MAGIC, path)
    width = (n_bits + 7) // 8
    expected = count * width
    if len(blob) - offset != expected:
        raise DataFormatError(
            f"{path}: payload is {len(blob) - offset} bytes, header implies {expected}"
        )
    packed = np.frombuffer(blob, dtype=np.uint8, offset=offset).reshape(count, width).copy()
    return packed, n_bits


def save_hierarchy(path, hierarchy: Hierarchy) -> None:
    """JSON snapshot; coordinates serialize through Python's shortest
    round-trip decimal repr, so reloading reproduces every double bit-exactly."""
    doc = {
        "format": "hierarchy",
        "version": 1,
        "curvature": hierarchy.curvature,
        "counts": hierarchy.counts,
        "layers": [layer.tolist() for layer in hierarchy.layers],
        "instance_parent": hierarchy.instance_parent.tolist(),
        "proto_parent": [p.tolist() for p in hierarchy.proto_parent],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_hierarchy(path) -> Hierarchy:
    try:
        with open(path, "r", encoding="ascii") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid hierarchy file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "hierarchy":
        raise DataFormatError(f"{path}: not a hierarchy file")
    if doc.get("version") != 1:
        raise DataFormatError(f"{path}: unsupported hierarchy version {doc.get('version')}")
    try:
        hierarchy = Hierarchy(
            curvature=float(doc["curvature"]),
            layers=[np.asarray(layer, dtype=np.float64) for layer in doc["layers"]],
            instance_parent=np.asarray(doc["instance_parent"], dtype=np.intp),
            proto_parent=[np.asarray(p, dtype=np.intp) for p in doc["proto_parent"]],
        )
        if [layer.shape[0] for layer in hierarchy.layers] != list(doc["counts"]):
            raise DataFormatError(f"{path}: counts disagree with layer shapes")
        hierarchy.validate()
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed hierarchy: {exc}") from exc
    return hierarchy


def write_metrics(path, records) -> None:
    """Newline-delimited JSON, one record per epoch, keys in insertion order."""
    with open(path, "w", encoding="ascii") as fh:
        for record in records:
            fh.write(json.dumps(record))
            fh.write("\n")


def read_metrics(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
