"""Seeded random streams.

Every stochastic routine in the package draws from a stream identified by an
integer seed and a short purpose tag, e.g. ``stream(7, "beta")``.  Streams are
backed by the counter-based Philox-4x64 bit generator keyed on
``(seed, blake2b(tag))``, so two different tags under the same seed never share
state and no routine touches a global generator.  Gaussian variates use the
Box-Muller transform on the stream's uniforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_key(tag: str) -> int:
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, tag: str = "") -> np.random.Generator:
    """Return an independent generator for ``(seed, tag)``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = np.array([seed & _MASK64, _tag_key(tag)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def substream(seed: int, *parts: object) -> np.random.Generator:
    """Stream keyed on a composite tag, e.g. ``substream(s, "repeat", 3)``."""
    return stream(seed, "/".join(str(p) for p in parts))


def uniform(gen: np.random.Generator, size=None) -> np.ndarray:
    """Uniform doubles in [0, 1)."""
    return gen.random(size)


def normal(gen: np.random.Generator, size=None) -> np.ndarray:
    """Standard normal variates by Box-Muller."""
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    count = int(np.prod(shape, dtype=np.int64))
    pairs = (count + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # (0, 1], keeps log finite
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    out = z[:count]
    if size is None:
        return float(out[0])
    return out.reshape(shape)


def rademacher(gen: np.random.Generator, size) -> np.ndarray:
    return np.where(gen.random(size) < 0.5, -1.0, 1.0)


def derive_seed(seed: int, *parts: object) -> int:
    """Deterministic child seed for ``(seed, *parts)``, for APIs that take integer seeds."""
    tag = "/".join(str(p) for p in (seed, *parts))
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "little") >> 1
