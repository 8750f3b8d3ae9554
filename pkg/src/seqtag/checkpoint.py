"""Self-describing binary checkpoint: magic 'SEQT', version, a sorted JSON
metadata blob, then named float64 little-endian parameter arrays.

Byte-for-byte deterministic for a given model state (no timestamps, sorted
keys/names), which the reproducibility guarantees rely on.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ParseError

MAGIC = b"SEQT"
VERSION = 1


def save_checkpoint(path, metadata: dict, arrays: dict[str, np.ndarray]):
    meta = json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(meta)))
        fh.write(meta)
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name], dtype="<f8")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        version, meta_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported checkpoint version {version}")
        metadata = json.loads(fh.read(meta_len).decode("utf-8"))
        (count,) = struct.unpack("<I", fh.read(4))
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim)) if ndim else ()
            n = int(np.prod(shape)) if shape else 1
            arrays[name] = np.frombuffer(fh.read(n * 8), dtype="<f8").reshape(shape).copy()
    return metadata, arrays
