"""Versioned binary parameter records.

Layout (little-endian): 8-byte magic, u32 version, u16-prefixed variant tag,
u32-prefixed JSON metadata, u32 tensor count, then a shape table of
(u16-prefixed name, u8 ndim, u32 dims...) entries, then every tensor's
float64 values in table order.
"""
from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PHZGPRM\x00"
VERSION = 1


class ParamsFormatError(ValueError):
    pass


def _pack_str(fmt: str, text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<" + fmt, len(raw)) + raw


def dumps(variant: str, tensors: dict[str, np.ndarray], metadata: dict | None = None) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(_pack_str("H", variant))
    buf.write(_pack_str("I", json.dumps(metadata or {}, sort_keys=True)))
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        buf.write(_pack_str("H", name))
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    for arr in tensors.values():
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return buf.getvalue()


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise ParamsFormatError("truncated parameter record")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def string(self, fmt: str) -> str:
        (n,) = self.unpack(fmt)
        return self.take(n).decode("utf-8")


def loads(raw: bytes) -> tuple[str, dict[str, np.ndarray], dict]:
    r = _Reader(raw)
    if r.take(len(MAGIC)) != MAGIC:
        raise ParamsFormatError("not a parameter record (bad magic)")
    (version,) = r.unpack("I")
    if version != VERSION:
        raise ParamsFormatError(f"unsupported parameter record version {version}")
    try:
        variant = r.string("H")
        metadata = json.loads(r.string("I"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ParamsFormatError("corrupt parameter record header") from None
    (count,) = r.unpack("I")
    table = []
    for _ in range(count):
        name = r.string("H")
        (ndim,) = r.unpack("B")
        table.append((name, r.unpack(f"{ndim}I") if ndim else ()))
    tensors = {}
    for name, shape in table:
        n = int(np.prod(shape)) if shape else 1
        tensors[name] = np.frombuffer(r.take(8 * n), dtype="<f8").reshape(shape).astype(np.float64)
    if r.pos != len(raw):
        raise ParamsFormatError("trailing bytes after parameter record")
    return variant, tensors, metadata


def save(path, variant: str, tensors: dict[str, np.ndarray], metadata: dict | None = None) -> None:
    Path(path).write_bytes(dumps(variant, tensors, metadata))


def load(path) -> tuple[str, dict[str, np.ndarray], dict]:
    return loads(Path(path).read_bytes())
