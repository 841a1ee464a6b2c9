"""Keyed counter-based random streams.

Every random draw in a session comes from a Philox stream keyed by
``(seed, *key)``, so results do not depend on execution order or on how work
is split across threads.
"""
from __future__ import annotations

import enum

import numpy as np


class Purpose(enum.IntEnum):
    ENCODE = 1
    DECODE = 2
    CLAIMS = 3
    TRIALS = 4
    AUDIT = 5
    BENCH = 6


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(seed & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
