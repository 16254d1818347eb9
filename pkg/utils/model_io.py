"""
Versioned binary model files.

Layout (all integers little-endian):

    b"EVEC"                      magic
    uint32                       format version
    uint32                       header length in bytes
    header                       UTF-8 JSON, sorted keys, compact separators:
                                 {"arrays": [{"name", "shape"}...], "kind", "meta"}
    array payloads               float64 little-endian, row-major, in header order

Array names are written in sorted order so that the same model always
serializes to the same bytes.
"""
import json
import struct
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from utils.artifacts import atomic_write_bytes
from utils.error_handler import ValidationException

MAGIC = b"EVEC"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sII")


def encode_model(kind: str, meta: Mapping[str, Any], arrays: Mapping[str, np.ndarray]) -> bytes:
    names = sorted(arrays)
    prepared = [np.ascontiguousarray(np.asarray(arrays[n], dtype="<f8")) for n in names]
    for name, arr in zip(names, prepared):
        if not np.all(np.isfinite(arr)):
            raise ValidationException(f"Array '{name}' of {kind} model has non-finite entries")
    header = {
        "kind": kind,
        "meta": dict(meta),
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in zip(names, prepared)],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes]
    parts.extend(a.tobytes(order="C") for a in prepared)
    return b"".join(parts)


def decode_model(data: bytes, kind: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    if len(data) < _PREFIX.size:
        raise ValidationException("Model file is truncated")
    magic, version, header_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValidationException("Not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise ValidationException(f"Unsupported model format version {version}")
    offset = _PREFIX.size
    header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    offset += header_len
    if header.get("kind") != kind:
        raise ValidationException(
            f"Expected a {kind} model, found {header.get('kind')}",
            details={"expected": kind, "found": header.get("kind")}
        )
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if offset + nbytes > len(data):
            raise ValidationException(f"Model file is truncated in array '{entry['name']}'")
        arrays[entry["name"]] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    return header["meta"], arrays


def save_model(path: str, kind: str, meta: Mapping[str, Any], arrays: Mapping[str, np.ndarray]) -> str:
    """
    Atomically write a model file.

    Args:
        path: Destination path
        kind: Model kind tag checked on load
        meta: JSON-serializable header metadata (dimensions, settings)
        arrays: Named arrays stored as float64

    Returns:
        The destination path
    """
    return atomic_write_bytes(path, encode_model(kind, meta, arrays))


def load_model(path: str, kind: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Read a model file written by save_model.

    Args:
        path: Model file path
        kind: Expected model kind

    Returns:
        (meta, arrays)
    """
    with open(path, "rb") as f:
        data = f.read()
    return decode_model(data, kind)
