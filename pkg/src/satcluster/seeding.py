"""Deterministic named RNG streams derived from one run seed."""

from __future__ import annotations

import zlib

import numpy as np


def stream_key(*tags) -> list[int]:
    return [zlib.crc32(str(t).encode()) for t in tags]


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Independent generator for (seed, tags); same inputs, same stream."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *stream_key(*tags)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derived_seed(seed: int, *tags) -> int:
    """Stable 63-bit integer derived from (seed, tags); used for env resets."""
    return int(rng_for(seed, *tags).integers(0, 2**63 - 1))
