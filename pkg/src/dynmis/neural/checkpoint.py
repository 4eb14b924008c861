"""Binary tensor container with a JSON sidecar.

Layout (little-endian)::

    b"DYNMISCK"            magic
    u32 version
    u32 tensor count
    per tensor: u16 name length, name (utf-8), u8 ndim, u64 * ndim dims
    raw float64 data of every tensor, in header order

The sidecar ``<path>.json`` carries configuration and provenance.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DYNMISCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode(tensors: list[tuple[str, np.ndarray]]) -> bytes:
    head = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    body = []
    for name, arr in tensors:
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f8")
        head.append(struct.pack("<H", len(raw)) + raw)
        head.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        body.append(arr.tobytes())
    return b"".join(head + body)


def decode(blob: bytes) -> list[tuple[str, np.ndarray]]:
    try:
        return _decode(blob)
    except struct.error as exc:
        raise CheckpointError(f"truncated header: {exc}") from exc


def _decode(blob: bytes) -> list[tuple[str, np.ndarray]]:
    if blob[:8] != MAGIC:
        raise CheckpointError("bad magic")
    version, count = struct.unpack_from("<II", blob, 8)
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    off = 16
    table = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off:off + ln].decode("utf-8")
        off += ln
        (ndim,) = struct.unpack_from("<B", blob, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}Q", blob, off)
        off += 8 * ndim
        table.append((name, shape))
    out = []
    for name, shape in table:
        size = int(np.prod(shape, dtype=np.int64))
        if off + 8 * size > len(blob):
            raise CheckpointError(f"truncated data for {name}")
        arr = np.frombuffer(blob, dtype="<f8", count=size, offset=off).reshape(shape).astype(np.float64)
        off += 8 * size
        out.append((name, arr))
    if off != len(blob):
        raise CheckpointError("trailing bytes after tensor data")
    return out


def sidecar(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def write(path, tensors, meta: dict) -> None:
    Path(path).write_bytes(encode(tensors))
    sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read(path) -> tuple[list[tuple[str, np.ndarray]], dict]:
    tensors = decode(Path(path).read_bytes())
    side = sidecar(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    return tensors, meta
