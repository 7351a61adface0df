"""Deterministic RNG stream derivation.

Every stochastic draw in the stack comes from a generator derived from
(scenario seed, stream tag, tick, ...) so replays are bit-exact.
"""

from __future__ import annotations

import numpy as np

DETECT = 0
ODOM = 1
EXPLORE = 2
SAFETY = 3


def derive_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))
