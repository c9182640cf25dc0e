"""Binary parameter checkpoints.

Layout: ``b"NNCK"``, version byte ``1``, then one record per parameter until
end of file::

    u16 LE name length | name (utf-8) | u8 ndim | ndim x u32 LE dims | f64 LE payload
"""
from __future__ import annotations

import struct

import numpy as np

from .tensor import Tensor

MAGIC = b"NNCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode_params(params) -> bytes:
    chunks = [MAGIC, bytes([VERSION])]
    for name, t in params.items():
        arr = t.data if isinstance(t, Tensor) else np.asarray(t)
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF or arr.ndim > 0xFF:
            raise CheckpointError(f"parameter {name!r} cannot be encoded")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_params(buf: bytes) -> dict:
    if buf[:4] != MAGIC:
        raise CheckpointError("bad magic, not an NNCK checkpoint")
    if len(buf) < 5 or buf[4] != VERSION:
        raise CheckpointError("unsupported checkpoint version")
    out = {}
    pos = 5
    try:
        while pos < len(buf):
            (n,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos:pos + n].decode("utf-8")
            pos += n
            ndim = buf[pos]
            pos += 1
            dims = struct.unpack_from(f"<{ndim}I", buf, pos)
            pos += 4 * ndim
            count = int(np.prod(dims, dtype=np.int64))
            if pos + 8 * count > len(buf):
                raise CheckpointError(f"truncated payload for {name!r}")
            out[name] = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).reshape(dims).astype(np.float64)
            pos += 8 * count
    except (struct.error, IndexError, UnicodeDecodeError) as e:
        raise CheckpointError(f"truncated or corrupt checkpoint: {e}") from None
    return out


def save_params(params, path):
    with open(path, "wb") as f:
        f.write(encode_params(params))


def load_params(path) -> dict:
    with open(path, "rb") as f:
        return decode_params(f.read())


def assign_params(params, arrays):
    """Copy decoded arrays into a model's ParamSet, checking names and shapes."""
    if list(params) != list(arrays):
        raise CheckpointError(f"parameter names differ: {list(params)} vs {list(arrays)}")
    for name, t in params.items():
        if t.shape != arrays[name].shape:
            raise CheckpointError(f"shape mismatch for {name!r}: {t.shape} vs {arrays[name].shape}")
        t.data = arrays[name].copy()
