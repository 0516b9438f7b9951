"""Flat binary parameter checkpoints.

Layout (all integers little-endian uint32):

    magic  b"LFPC"
    version
    parameter count
    per parameter:
        name length, name (UTF-8)
        rank, dims[rank]
        payload: prod(dims) little-endian float64, row-major
"""
from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigError

MAGIC = b"LFPC"
VERSION = 1


def dumps(params: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(params)))
    for name, arr in params.items():
        a = np.array(arr, dtype="<f8", order="C")
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", a.ndim))
        buf.write(struct.pack(f"<{a.ndim}I", *a.shape))
        buf.write(a.tobytes(order="C"))
    return buf.getvalue()


def loads(blob: bytes) -> dict[str, np.ndarray]:
    view = memoryview(blob)
    if bytes(view[:4]) != MAGIC:
        raise ConfigError("not a parameter checkpoint (bad magic)")
    version, count = struct.unpack_from("<II", view, 4)
    if version != VERSION:
        raise ConfigError(f"unsupported checkpoint version {version}")
    pos = 12
    out = {}
    for _ in range(count):
        try:
            (nlen,) = struct.unpack_from("<I", view, pos)
            pos += 4
            name = bytes(view[pos : pos + nlen]).decode("utf-8")
            pos += nlen
            (rank,) = struct.unpack_from("<I", view, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", view, pos)
            pos += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(view, dtype="<f8", count=n, offset=pos).reshape(dims).astype(np.float64)
        except (struct.error, ValueError, UnicodeDecodeError) as exc:
            raise ConfigError(f"truncated or corrupt checkpoint: {exc}") from exc
        pos += 8 * n
        out[name] = arr
    if pos != len(blob):
        raise ConfigError("trailing bytes after checkpoint payload")
    return out


def save(path, params: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps(params))


def load(path) -> dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())
