"""Aligned time series and per-horizon regression frames."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

TRANSFORM_KINDS = ("cumulative-log-growth", "first-difference", "z-score", "identity")
OUTCOME_KINDS = ("level", "cumulative-sum", "cumulative-log-growth")


@dataclass(frozen=True)
class Panel:
    """Multivariate series sharing a strictly increasing integer time index."""

    names: tuple[str, ...]
    data: np.ndarray
    index: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.names):
            raise ValueError("data must be T x n with one column per name")
        if data.shape[0] < 1:
            raise ValueError("panel needs at least one observation")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate column names in {self.names}")
        index = np.asarray(self.index, dtype=np.int64)
        if index.shape != (data.shape[0],):
            raise ValueError("index length does not match data")
        if np.any(np.diff(index) <= 0):
            raise ValueError("index must be strictly increasing")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise ValueError(
                f"missing value in column {self.names[bad[1]]!r} at index {index[bad[0]]}"
            )
        data.flags.writeable = False
        index.flags.writeable = False
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "index", index)

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[float]], index=None) -> "Panel":
        names = tuple(columns)
        lengths = {len(v) for v in columns.values()}
        if len(lengths) != 1:
            raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
        (T,) = lengths
        data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
        if index is None:
            index = np.arange(T)
        return cls(names, data, np.asarray(index))

    def __len__(self) -> int:
        return self.data.shape[0]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    def with_columns(self, columns: Mapping[str, Sequence[float]]) -> "Panel":
        """Return a new panel with columns added or replaced."""
        merged = {n: self.column(n) for n in self.names}
        merged.update({k: np.asarray(v, dtype=float) for k, v in columns.items()})
        return Panel.from_columns(merged, self.index)

    def slice_rows(self, start: int, stop: int | None = None) -> "Panel":
        return Panel(self.names, self.data[start:stop], self.index[start:stop])


@dataclass(frozen=True)
class ProjectionFrame:
    """One horizon's regression data: outcome lead, treatment and controls.

    ``times`` carries the time stamp of the treatment for every row so the
    alignment can be audited after construction.
    """

    horizon: int
    outcome: np.ndarray
    treatment: np.ndarray
    controls: np.ndarray
    control_names: tuple[str, ...] = ()
    times: np.ndarray | None = None
    outcome_times: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        y = np.asarray(self.outcome, dtype=float)
        d = np.asarray(self.treatment, dtype=float)
        W = np.asarray(self.controls, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        if not (y.shape[0] == d.shape[0] == W.shape[0]):
            raise ValueError("outcome, treatment and controls must share rows")
        times = np.arange(y.shape[0]) if self.times is None else np.asarray(self.times)
        names = self.control_names or tuple(f"w{j}" for j in range(W.shape[1]))
        if len(names) != W.shape[1]:
            raise ValueError("control_names length does not match controls")
        for a in (y, d, W):
            a.flags.writeable = False
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "treatment", d)
        object.__setattr__(self, "controls", W)
        object.__setattr__(self, "control_names", tuple(names))
        object.__setattr__(self, "times", times)

    @property
    def n_obs(self) -> int:
        return self.outcome.shape[0]

    @property
    def n_controls(self) -> int:
        return self.controls.shape[1]

    def treatment_terms(self, degree: int = 1) -> np.ndarray:
        """Columns D, D^2, ... up to ``degree``."""
        return np.column_stack([self.treatment**j for j in range(1, degree + 1)])

    def take(self, rows: np.ndarray) -> "ProjectionFrame":
        """Frame made of the given rows (used by the block bootstrap)."""
        rows = np.asarray(rows)
        return ProjectionFrame(
            self.horizon,
            self.outcome[rows],
            self.treatment[rows],
            self.controls[rows],
            self.control_names,
            self.times[rows],
            None if self.outcome_times is None else self.outcome_times[rows],
        )


@dataclass(frozen=True)
class TransformSpec:
    kind: str = "identity"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform {self.kind!r}; expected one of {TRANSFORM_KINDS}")


def cumulative_log_growth(levels: Sequence[float], h: int) -> np.ndarray:
    """100 * [log(levels[t+h]) - log(levels[t-1])], NaN where undefined.

    The output has the same length as ``levels`` and is indexed by t.
    """
    x = np.asarray(levels, dtype=float)
    if h < 0:
        raise ValueError("h must be non-negative")
    if h + 1 >= x.shape[0]:
        raise ValueError(f"need more than h + 1 = {h + 1} levels, got {x.shape[0]}")
    bad = np.flatnonzero(~(x > 0))
    if bad.size:
        raise ValueError(f"non-positive level {x[bad[0]]} at index {bad[0]}")
    logs = np.log(x)
    out = np.full(x.shape[0], np.nan)
    T = x.shape[0]
    t = np.arange(1, T - h)
    out[t] = 100.0 * (logs[t + h] - logs[t - 1])
    return out


def z_score(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("degenerate series: need at least two observations")
    sd = x.std(ddof=1)
    if not sd > 0 or sd < 1e-14 * max(1.0, np.abs(x).max()):
        raise ValueError("degenerate series: zero sample standard deviation")
    return (x - x.mean()) / sd


def first_difference(x: Sequence[float]) -> np.ndarray:
    """x[t] - x[t-1] with a leading NaN so the output aligns with the input."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape[0], np.nan)
    out[1:] = np.diff(x)
    return out


def apply_transform(x: Sequence[float], spec: TransformSpec) -> np.ndarray:
    """Apply a one-series transform; the output aligns with the input (NaN-padded)."""
    x = np.asarray(x, dtype=float)
    if spec.kind == "identity":
        out = x.copy()
    elif spec.kind == "first-difference":
        out = first_difference(x)
    elif spec.kind == "cumulative-log-growth":
        out = cumulative_log_growth(x, 0)
    else:
        out = z_score(x)
    return out * spec.scale


def _outcome_values(series: np.ndarray, rows: np.ndarray, h: int, kind: str) -> np.ndarray:
    if kind == "level":
        return series[rows + h]
    if kind == "cumulative-sum":
        csum = np.concatenate([[0.0], np.cumsum(series)])
        return csum[rows + h + 1] - csum[rows]
    if np.any(series <= 0):
        bad = int(np.flatnonzero(series <= 0)[0])
        raise ValueError(f"non-positive level {series[bad]} at index {bad}")
    logs = np.log(series)
    return 100.0 * (logs[rows + h] - logs[rows - 1])


def build_frame(
    panel: Panel,
    outcome: str,
    treatment: str,
    contemporaneous_controls: Iterable[str] = (),
    lag_spec: tuple[Iterable[str], int] = ((), 0),
    h: int = 0,
    outcome_kind: str = "level",
) -> ProjectionFrame:
    """Build the row-aligned regression frame for horizon ``h``.

    Controls are ``[intercept, contemporaneous controls at t, lags 1..L of
    the lagged columns]``; lags are grouped by column. ``outcome_kind``
    selects how the lead is formed: ``level`` uses the column at t+h,
    ``cumulative-sum`` sums t..t+h and ``cumulative-log-growth`` is
    100*[log x(t+h) - log x(t-1)]. Rows with an undefined lead or lag are
    dropped, leaving T - h - maxlag rows.
    """
    if outcome_kind not in OUTCOME_KINDS:
        raise ValueError(f"unknown outcome kind {outcome_kind!r}")
    lag_names, maxlag = lag_spec
    lag_names = list(lag_names)
    contemporaneous_controls = list(contemporaneous_controls)
    if h < 0 or maxlag < 0:
        raise ValueError("h and max lag must be non-negative")
    for name in [outcome, treatment, *contemporaneous_controls, *lag_names]:
        if name not in panel:
            raise KeyError(f"no column named {name!r}")

    T = len(panel)
    start = maxlag
    if outcome_kind == "cumulative-log-growth":
        start = max(start, 1)
    rows = np.arange(start, T - h)
    n_controls = 1 + len(contemporaneous_controls) + maxlag * len(lag_names)
    if rows.size < n_controls + 2:
        raise ValueError(
            f"insufficient observations: {max(rows.size, 0)} rows for {n_controls} controls at h={h}"
        )

    cols = [np.ones(rows.size)]
    names = ["const"]
    for name in contemporaneous_controls:
        cols.append(panel.column(name)[rows])
        names.append(name)
    for name in lag_names:
        x = panel.column(name)
        for j in range(1, maxlag + 1):
            cols.append(x[rows - j])
            names.append(f"{name}_lag{j}")
    W = np.column_stack(cols)
    rank = np.linalg.matrix_rank(W)
    if rank < W.shape[1]:
        raise ValueError(f"control matrix is rank deficient (rank {rank} < {W.shape[1]}) at h={h}")

    y = _outcome_values(panel.column(outcome), rows, h, outcome_kind)
    return ProjectionFrame(
        horizon=h,
        outcome=y,
        treatment=panel.column(treatment)[rows],
        controls=W,
        control_names=tuple(names),
        times=panel.index[rows],
        outcome_times=panel.index[rows + h],
    )
