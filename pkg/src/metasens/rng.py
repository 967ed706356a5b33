"""Seeded, splittable random streams.

All randomness in the package flows through :func:`stream`, which keys a
PCG64 generator on a tuple of non-negative integers.  Replication ``r`` of
design size ``n`` under master seed ``s`` therefore always sees the same
numbers, whatever order (or thread) it runs in.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    part = int(part)
    if part < 0:
        raise ValueError("stream keys must be non-negative")
    return part


def stream(*keys) -> np.random.Generator:
    """Return a generator for the stream identified by ``keys``.

    Keys are ints or short strings (hashed with CRC32 so that, e.g.,
    ``stream(seed, "test")`` never collides with ``stream(seed, 0)`` in
    practice).
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([_key(k) for k in keys])))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    if isinstance(seed, (tuple, list)):
        return stream(*seed)
    return stream(seed)
