"""Deterministic random-stream derivation.

All stochastic routines in this package take explicit generators. Streams
for sub-tasks are derived from a master seed and an integer key path, so
results do not depend on scheduling or call order.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return a generator for the sub-task identified by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
