"""Seeded random streams.

One run seed fans out into independent generators keyed by fixed offsets so
that, e.g., changing how much noise is drawn never perturbs initialization.
"""

from __future__ import annotations

import numpy as np

INIT = 1
DATA = 2
NOISE = 3
SNR = 4
REPLAY = 5
EVAL = 6
MOCK_KB = 7


def stream(seed: int, offset: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(offset), *map(int, extra)])
