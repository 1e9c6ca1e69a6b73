"""Deterministic random-stream keying.

Every sampler takes an explicit ``numpy.random.Generator``.  Experiments key
their streams by (seed, task, chunk) so that results are reproducible and
independent of how work is scheduled across workers: each chunk owns a stream
derived from the chunk index alone, and reductions run in fixed chunk order.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed: int, *key) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *key)``.

    Key parts may be ints or strings; strings are hashed with CRC32 so the
    mapping is stable across processes and platforms.
    """
    spawn_key = tuple(_key_int(p) for p in key)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))


def chunk_sizes(total: int, n_chunks: int) -> list[int]:
    """Split ``total`` into ``n_chunks`` near-equal parts (fixed, order-stable)."""
    base, extra = divmod(total, n_chunks)
    return [base + (1 if c < extra else 0) for c in range(n_chunks)]
