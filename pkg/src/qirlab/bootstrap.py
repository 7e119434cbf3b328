"""Block-of-blocks bootstrap for per-horizon regression frames."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .rng import rng_for
from .timeseries import ProjectionFrame

MAX_FAILURE_SHARE = 0.10


@dataclass(frozen=True)
class BootConfig:
    block_length: int = 7
    replications: int = 1000
    level: float = 0.90
    seed: int = 0

    def __post_init__(self):
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")
        if self.replications < 2:
            raise ValueError("need at least 2 bootstrap replications")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")


class BootInterval(NamedTuple):
    lower: float
    upper: float
    draws: np.ndarray


def block_indices(n: int, block_length: int, rng: np.random.Generator) -> np.ndarray:
    """Row indices of one moving-block resample of length ``n``.

    ceil(n / l) block starts are drawn uniformly from 0..n-l; the blocks
    are concatenated and the overshoot truncated (no wrap-around).
    """
    if not 1 <= block_length <= n:
        raise ValueError(f"block length {block_length} outside 1..{n}")
    n_blocks = math.ceil(n / block_length)
    starts = rng.integers(0, n - block_length + 1, size=n_blocks)
    return (starts[:, None] + np.arange(block_length)).ravel()[:n]


def percentile_interval(draws, level: float) -> tuple[float, float]:
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(np.asarray(draws, dtype=float), [a, 1.0 - a])
    return float(lo), float(hi)


def block_bootstrap_ci(
    frame: ProjectionFrame,
    estimator: Callable[[ProjectionFrame], float],
    config: BootConfig,
    stream: tuple[int, ...] = (),
) -> BootInterval:
    """Percentile interval of ``estimator`` over block-resampled frames.

    Each frame row already holds the lead outcome, treatment and lagged
    controls, so resampling rows keeps the within-tuple timing intact.
    ``stream`` extends the seed's counter path, letting callers give each
    (tau, h) cell its own reproducible stream. Failed replications are
    skipped; more than 10% failures raise.
    """
    n = frame.n_obs
    rng = rng_for(config.seed, *stream)
    draws = []
    failures = 0
    last_error = None
    for _ in range(config.replications):
        rows = block_indices(n, config.block_length, rng)
        try:
            draws.append(float(estimator(frame.take(rows))))
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            failures += 1
            last_error = exc
    if failures > MAX_FAILURE_SHARE * config.replications:
        raise RuntimeError(
            f"{failures}/{config.replications} bootstrap replications failed; last error: {last_error}"
        )
    draws = np.asarray(draws)
    lo, hi = percentile_interval(draws, config.level)
    return BootInterval(lo, hi, draws)
