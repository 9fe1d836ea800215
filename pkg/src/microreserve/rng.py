"""Reproducible counter-based random substreams.

Every stochastic routine in this package draws from a named substream
derived from a 64-bit seed plus a label path (e.g. ``(seed, "rbns", year,
claim, "zeta")``).  Streams are backed by the Philox counter-based
generator, so draws are independent of execution order and worker
scheduling, and common random numbers across scenario grid points come
for free: two scenarios that share a (seed, label path) consume the same
uniforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream"]


def _label_digest(labels: tuple) -> int:
    """Stable 64-bit digest of a label path (Python hash() is salted)."""
    canon = "\x1f".join(repr(x) for x in labels).encode()
    return int.from_bytes(hashlib.blake2b(canon, digest_size=8).digest(), "big")


def substream(seed: int, *labels) -> np.random.Generator:
    """Return an independent Generator keyed by ``(seed, *labels)``.

    The same (seed, labels) always yields an identical stream; distinct
    label paths yield streams with distinct 128-bit Philox keys.
    """
    key = ((int(seed) & 0xFFFFFFFFFFFFFFFF) << 64) | _label_digest(labels)
    return np.random.Generator(np.random.Philox(key=key))
