"""Named-tensor weight container ("NTWS") binary format.

Layout, all integers little-endian:

    magic   4 bytes  b"NTWS"
    version u16
    count   u32
    entries, each:
        name_len u16, name utf-8, rank u8, dims u32 * rank,
        values: float64 little-endian, row-major

Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from typing import Dict

import numpy as np

from .errors import FileFormatError

MAGIC = b"NTWS"
VERSION = 1


def save_weights(entries: Dict[str, np.ndarray], path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(entries)))
        for name, arr in entries.items():
            arr = np.ascontiguousarray(arr, dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8").tobytes())


def load_weights(path) -> Dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 10 or raw[:4] != MAGIC:
        raise FileFormatError(f"{path}: not an NTWS container")
    version, count = struct.unpack_from("<HI", raw, 4)
    if version != VERSION:
        raise FileFormatError(f"{path}: unsupported NTWS version {version}")
    pos = 10
    entries: Dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", raw, pos)
            pos += 2
            name = raw[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<B", raw, pos)
            pos += 1
            dims = struct.unpack_from(f"<{rank}I", raw, pos)
            pos += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            end = pos + 8 * n
            if end > len(raw):
                raise FileFormatError(f"{path}: truncated entry '{name}'")
            values = np.frombuffer(raw[pos:end], dtype="<f8").astype(np.float64)
            pos = end
            entries[name] = values.reshape(dims)
    except struct.error as exc:
        raise FileFormatError(f"{path}: truncated container") from exc
    return entries
