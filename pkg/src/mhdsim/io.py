"""Snapshot files and JSON-lines streams.

A snapshot is the magic line ``MHDSNAP1``, a little-endian uint64 header
length, a JSON header, then raw little-endian float64 arrays at the offsets
the header declares.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .state import PlasmaVacuumState

__all__ = ["MAGIC", "write_snapshot", "read_snapshot", "JsonlWriter", "read_jsonl"]

MAGIC = b"MHDSNAP1\n"
_LE_F64 = np.dtype("<f8")


def write_snapshot(path, state: PlasmaVacuumState, meta: dict | None = None) -> None:
    """Write ``state`` bit-exactly; ``meta`` (grid, config) is stored in the header."""
    arrays = {k: np.ascontiguousarray(getattr(state, k), dtype=_LE_F64) for k in PlasmaVacuumState.FIELDS}
    offset = 0
    entries = []
    for name, a in arrays.items():
        entries.append({"name": name, "shape": list(a.shape), "offset": offset})
        offset += a.nbytes
    header = {"time": float(state.t).hex(), "arrays": entries, "meta": meta or {}}
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for a in arrays.values():
            fh.write(a.tobytes())


def read_snapshot(path) -> tuple[PlasmaVacuumState, dict]:
    """Read a snapshot written by :func:`write_snapshot`.

    Raises
    ------
    ParseError
        Bad magic, truncated file or malformed header.
    """
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ParseError(f"{path}: not a snapshot file")
    pos = len(MAGIC)
    if len(raw) < pos + 8:
        raise ParseError(f"{path}: truncated header")
    (hlen,) = struct.unpack("<Q", raw[pos : pos + 8])
    pos += 8
    try:
        header = json.loads(raw[pos : pos + hlen])
        entries = header["arrays"]
        t = float.fromhex(header["time"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: malformed header ({exc})") from exc
    data = raw[pos + hlen :]
    fields = {}
    for e in entries:
        count = int(np.prod(e["shape"], dtype=np.int64))
        start = e["offset"]
        if start + 8 * count > len(data):
            raise ParseError(f"{path}: truncated array {e['name']}")
        fields[e["name"]] = np.frombuffer(data, dtype=_LE_F64, count=count, offset=start).reshape(e["shape"]).astype(float)
    missing = set(PlasmaVacuumState.FIELDS) - set(fields)
    if missing:
        raise ParseError(f"{path}: missing arrays {sorted(missing)}")
    return PlasmaVacuumState(t, *(fields[k] for k in PlasmaVacuumState.FIELDS)), header.get("meta", {})


class JsonlWriter:
    """Append one JSON object per line; floats are written with full precision."""

    def __init__(self, path):
        self._fh = open(path, "w")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True, allow_nan=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
