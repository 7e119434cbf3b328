"""Loading monthly CSV data and building the empirical treatments and design."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from .lp import LpDesign
from .timeseries import Panel, TransformSpec, apply_transform, first_difference, z_score

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TREATMENT_SLOT = 4
N_ORDERED = 8
DEFAULT_WINDOW = ("1985-01", "2023-08")


def month_index(stamp: str) -> int:
    """'YYYY-MM' -> months since year 0."""
    year, month = stamp.strip()[:7].split("-")
    return int(year) * 12 + int(month) - 1


def month_label(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


@dataclass(frozen=True)
class DerivedSeries:
    source: str
    transform: TransformSpec


@dataclass(frozen=True)
class DatasetManifest:
    """Where the data lives and which column plays which role.

    ``ordering`` lists the eight recursively ordered variables; the fifth
    entry is the slot that receives the chosen treatment series.
    """

    files: tuple[Path, ...]
    ordering: tuple[str, ...]
    ip_level: str
    date_column: str = "date"
    window: tuple[str, str] = DEFAULT_WINDOW
    ebp: str | None = None
    realized_vol: str | None = None
    implied_vol: str | None = None
    derived: dict = field(default_factory=dict)
    source: Path | None = None

    def __post_init__(self):
        if len(self.ordering) != N_ORDERED:
            raise ValueError(f"ordering must list exactly {N_ORDERED} variables, got {len(self.ordering)}")
        if len(set(self.ordering)) != N_ORDERED:
            raise ValueError("ordering entries must be distinct")

    @property
    def treatment_slot(self) -> str:
        return self.ordering[TREATMENT_SLOT]

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        """Read a TOML or JSON manifest; file paths are relative to it."""
        path = Path(path)
        raw = path.read_bytes()
        if path.suffix.lower() == ".json":
            cfg = json.loads(raw)
        else:
            cfg = tomllib.loads(raw.decode())
        return cls.from_dict(cfg, path.parent, path)

    @classmethod
    def from_dict(cls, cfg: dict, root: Path = Path("."), source: Path | None = None) -> "DatasetManifest":
        data = cfg.get("data", {})
        roles = cfg.get("roles", {})
        window = cfg.get("window", {})
        derived = {
            name: DerivedSeries(spec["source"], TransformSpec(spec.get("kind", "identity"), spec.get("scale", 1.0)))
            for name, spec in cfg.get("derived", {}).items()
        }
        return cls(
            files=tuple(Path(root) / f for f in data["files"]),
            ordering=tuple(roles["ordering"]),
            ip_level=roles["ip_level"],
            date_column=data.get("date_column", "date"),
            window=(window.get("start", DEFAULT_WINDOW[0]), window.get("end", DEFAULT_WINDOW[1])),
            ebp=roles.get("ebp"),
            realized_vol=roles.get("realized_vol"),
            implied_vol=roles.get("implied_vol"),
            derived=derived,
            source=source,
        )


def sample_manifest_path(name: str = "manifest.toml") -> Path:
    """Path of a bundled synthetic manifest (``manifest.toml`` or ``manifest_small.toml``)."""
    return Path(str(resources.files("qirlab") / "data" / "sample" / name))


def _read_csv(path: Path, date_column: str) -> pd.DataFrame:
    df = pd.read_csv(path, comment="#", dtype={date_column: str})
    if date_column not in df.columns:
        raise ValueError(f"{path}: no {date_column!r} column")
    df.index = [month_index(s) for s in df[date_column]]
    if df.index.has_duplicates:
        raise ValueError(f"{path}: duplicated dates")
    return df.drop(columns=[date_column]).astype(float)


def load_panel(manifest: DatasetManifest) -> Panel:
    """Inner-join every file on its date column and clip to the sample window.

    Raises if consecutive retained months are not contiguous, listing up to
    the first ten missing months.
    """
    frames = [_read_csv(p, manifest.date_column) for p in manifest.files]
    df = frames[0]
    for other in frames[1:]:
        dup = set(df.columns) & set(other.columns)
        if dup:
            raise ValueError(f"column(s) {sorted(dup)} appear in more than one file")
        df = df.join(other, how="inner")
    lo, hi = (month_index(s) for s in manifest.window)
    df = df.sort_index().loc[lo:hi]
    if df.empty:
        raise ValueError("no observations inside the sample window")
    idx = df.index.to_numpy()
    missing = sorted(set(range(idx[0], idx[-1] + 1)) - set(idx.tolist()))
    if missing:
        shown = ", ".join(month_label(m) for m in missing[:10])
        raise ValueError(f"{len(missing)} missing month(s) inside the window: {shown}")
    if df.isna().to_numpy().any():
        col = df.columns[df.isna().any()][0]
        first = month_label(int(df.index[df[col].isna()][0]))
        raise ValueError(f"missing value in {col!r} at {first}")
    return Panel(tuple(df.columns), df.to_numpy(), idx)


def make_credit_risk(ebp) -> np.ndarray:
    """Z-scored first difference of the excess bond premium (length n - 1)."""
    ebp = np.asarray(ebp, dtype=float)
    if ebp.shape[0] < 3:
        raise ValueError("need at least 3 EBP observations")
    return z_score(np.diff(ebp))


def make_volatility_risk(realized, implied) -> np.ndarray:
    """Z-scored realized-minus-implied volatility."""
    realized = np.asarray(realized, dtype=float)
    implied = np.asarray(implied, dtype=float)
    if realized.shape != implied.shape:
        raise ValueError("realized and implied volatility must be aligned")
    return z_score(realized - implied)


def prepare_panel(panel: Panel, manifest: DatasetManifest, treatment: str) -> Panel:
    """Add derived series and the chosen treatment in the ordering's treatment slot.

    ``treatment`` is ``credit-risk``, ``volatility-risk`` or the name of an
    existing column (which is z-scored). Leading rows made undefined by
    differencing are dropped; the treatment is standardised over the rows
    that remain.
    """
    cols = {n: panel.column(n) for n in panel.names}
    for name, spec in manifest.derived.items():
        if spec.source not in cols:
            raise KeyError(f"derived series {name!r}: no source column {spec.source!r}")
        cols[name] = apply_transform(cols[spec.source], spec.transform)

    if treatment == "credit-risk":
        if manifest.ebp is None or manifest.ebp not in cols:
            raise KeyError("credit-risk treatment needs the manifest's ebp column")
        raw = first_difference(cols[manifest.ebp])
    elif treatment == "volatility-risk":
        for role in ("realized_vol", "implied_vol"):
            if getattr(manifest, role) is None or getattr(manifest, role) not in cols:
                raise KeyError(f"volatility-risk treatment needs the manifest's {role} column")
        raw = cols[manifest.realized_vol] - cols[manifest.implied_vol]
    elif treatment in cols:
        raw = np.asarray(cols[treatment], dtype=float)
    else:
        raise KeyError(f"unknown treatment {treatment!r}")
    cols[manifest.treatment_slot] = raw

    stacked = np.column_stack(list(cols.values()))
    defined = np.all(np.isfinite(stacked), axis=1)
    first = int(np.argmax(defined))
    if not defined[first:].all():
        bad = first + int(np.argmin(defined[first:]))
        raise ValueError(f"undefined value inside the sample at {month_label(int(panel.index[bad]))}")
    cols = {n: v[first:] for n, v in cols.items()}
    cols[manifest.treatment_slot] = z_score(cols[manifest.treatment_slot])
    return Panel.from_columns(cols, panel.index[first:])


def empirical_design(panel: Panel, manifest: DatasetManifest, max_lag: int = 2) -> LpDesign:
    """Recursive-ordering design for the industrial-production application.

    Contemporaneous controls are the four variables ordered before the
    treatment; every one of the eight ordered variables enters with lags
    1..max_lag; the outcome is cumulative log growth of the IP level.
    """
    missing = [n for n in (*manifest.ordering, manifest.ip_level) if n not in panel]
    if missing:
        raise KeyError(f"panel lacks ordered variable(s) {missing}")
    return LpDesign(
        outcome=manifest.ip_level,
        treatment=manifest.treatment_slot,
        contemporaneous=manifest.ordering[:TREATMENT_SLOT],
        lagged=manifest.ordering,
        max_lag=max_lag,
        outcome_kind="cumulative-log-growth",
        timing_restriction=True,
    )
