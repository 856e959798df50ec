"""Versioned binary checkpoint: a flat map of name -> float64 array."""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"FBCK"
VERSION = 1


def save(path: str, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BI", VERSION, len(arrays)))
        for name in sorted(arrays):
            # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d
            arr = np.asarray(arrays[name], dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())


def load(path: str) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError("not a checkpoint file: %s" % path)
        version, count = struct.unpack("<BI", fh.read(5))
        if version != VERSION:
            raise ValueError("unsupported checkpoint version %d" % version)
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = tuple(struct.unpack("<I", fh.read(4))[0]
                          for _ in range(ndim))
            size = int(np.prod(shape)) if shape else 1
            data = fh.read(8 * size)
            out[name] = (np.frombuffer(data, dtype=np.float64)
                         .reshape(shape).copy())
    return out
