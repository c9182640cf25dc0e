"""Hierarchical seed derivation.

Child streams are addressed by a key path (``master -> rep -> component``)
rather than by draw order, so adding a sweep point never shifts the
randomness of the others.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np


def _key(k):
    if isinstance(k, (bool, np.bool_)):
        return int(k)
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("seed keys must be non-negative")
        return int(k)
    if isinstance(k, (float, np.floating)):
        return struct.unpack("<Q", struct.pack("<d", float(k)))[0]
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    raise TypeError(f"unsupported seed key {k!r}")


def seed_sequence(master: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=tuple(_key(k) for k in keys))


def rng(master: int, *keys) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master, *keys))


def derive_seed(master: int, *keys) -> int:
    """A 64-bit integer seed for the stream at ``keys``."""
    return int(seed_sequence(master, *keys).generate_state(1, dtype=np.uint64)[0])
