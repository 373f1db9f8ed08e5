"""Versioned binary container mapping parameter paths to row-major arrays.

Layout::

    b"TGNNCKPT" | uint32 version | uint64 header length | JSON header | array data

The header lists every array (path, shape, dtype, offset) plus free-form
metadata and the RNG seed. No timestamps are written, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"TGNNCKPT"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, arrays: dict[str, np.ndarray], seed: int, meta: dict | None = None):
    entries, chunks, offset = [], [], 0
    for name in sorted(arrays):
        a = np.asarray(arrays[name])
        a = np.ascontiguousarray(a).reshape(a.shape)  # keeps 0-d arrays 0-d
        dt = a.dtype.newbyteorder("<")
        raw = a.astype(dt, copy=False).tobytes(order="C")
        entries.append({"path": name, "shape": list(a.shape), "dtype": dt.str, "offset": offset,
                        "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"format_version": CHECKPOINT_VERSION, "seed": seed, "meta": meta or {},
                         "arrays": entries}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header)))
        f.write(header)
        for c in chunks:
            f.write(c)
    tmp.replace(path)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], int, dict]:
    """Return (arrays, seed, meta)."""
    blob = Path(path).read_bytes()
    if blob[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack_from("<IQ", blob, len(MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    start = len(MAGIC) + 12
    header = json.loads(blob[start:start + hlen].decode("utf-8"))
    base = start + hlen
    arrays = {}
    for e in header["arrays"]:
        lo = base + e["offset"]
        a = np.frombuffer(blob, dtype=np.dtype(e["dtype"]), count=int(np.prod(e["shape"], dtype=np.int64)),
                          offset=lo).reshape(e["shape"])
        arrays[e["path"]] = a.astype(a.dtype.newbyteorder("="), copy=True)
    return arrays, header["seed"], header["meta"]
