"""Bit-exact parameter files.

Layout (little-endian)::

    b"APIPM1\\n" | u32 version=1 | u32 meta_len | meta (UTF-8 key=value lines)
    | u32 n_tensors | per tensor: u32 name_len | name | u32 ndim | ndim x u32 | f64 data
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"APIPM1\n"
VERSION = 1


def save_params(path, params: dict, meta: dict | None = None) -> None:
    meta_text = "".join(f"{k}={v}\n" for k, v in (meta or {}).items()).encode()
    parts = [MAGIC, struct.pack("<II", VERSION, len(meta_text)), meta_text, struct.pack("<I", len(params))]
    for name, value in params.items():
        value = np.asarray(value, dtype="<f8")
        key = name.encode()
        parts.append(struct.pack("<I", len(key)) + key)
        parts.append(struct.pack(f"<I{value.ndim}I", value.ndim, *value.shape))
        parts.append(value.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated file while reading {what}", self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def load_params(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Returns ``(params, meta)``."""
    r = _Reader(Path(path).read_bytes())
    head = r.buf[:len(MAGIC)]
    if head != MAGIC:
        bad = next((i for i, (a, b) in enumerate(zip(head, MAGIC)) if a != b), len(head))
        raise FormatError("bad magic", bad)
    r.pos = len(MAGIC)
    version = r.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", r.pos - 4)
    meta_len = r.u32("metadata length")
    meta = {}
    for line in r.take(meta_len, "metadata").decode().splitlines():
        key, _, value = line.partition("=")
        meta[key] = value
    params = {}
    for _ in range(r.u32("tensor count")):
        name = r.take(r.u32("name length"), "tensor name").decode()
        ndim = r.u32(f"rank of {name}")
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim, f"shape of {name}"))
        n = int(np.prod(shape, dtype=np.int64))
        data = r.take(8 * n, f"data of {name}")
        params[name] = np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(shape)
    if r.pos != len(r.buf):
        raise FormatError("trailing bytes after last tensor", r.pos)
    return params, meta
