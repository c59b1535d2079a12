"""Seeded random streams.

Every random draw in the package goes through :func:`stream`, which maps a
master seed plus a fixed purpose tag (and optional sub-keys such as the epoch
index) onto an independent PCG64 generator via ``numpy.random.SeedSequence``
spawn keys.  Changing how many epochs run therefore never perturbs the data
split or the basis draw.
"""

from __future__ import annotations

import numpy as np

INIT = 0
SPLIT = 1
BASIS = 2
BATCH = 3
SYNTH = 4


def stream(seed: int, purpose: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, keys)))
    return np.random.Generator(np.random.PCG64(ss))
