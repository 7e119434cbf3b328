"""Seeded, portable random streams.

Every stream is a PCG64 generator keyed by a master seed plus an integer
counter path, so replication r of an experiment is reproducible on its own
and independent of how many other replications ran or in which order.
"""
from __future__ import annotations

import os

import numpy as np

GENERATOR = "numpy.random.PCG64"
SEED_ENV = "QIRLAB_SEED"


def rng_for(seed: int, *counter: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=counter)))


def resolve_seed(seed: int | None, default: int = 0) -> int:
    """Explicit seed, else ``$QIRLAB_SEED``, else ``default``."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else default
