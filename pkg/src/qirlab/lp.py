"""Local projections: mean, conditional-quantile and structural-quantile responses."""
from __future__ import annotations

import enum
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bootstrap import BootConfig, block_bootstrap_ci
from .gqr import GqrConfig, GridBoundaryWarning, SqfSpec, ThinTailWarning, fit_gqr
from .qr import fit_qr
from .timeseries import Panel, ProjectionFrame, build_frame

CUMULATIVE_NOTE = (
    "Responses of cumulative outcomes are effects on quantiles of the cumulative "
    "distribution; they are not sums of per-period quantile effects unless the "
    "period outcomes are comonotonic. No adjustment is made."
)


class EstimatorKind(str, enum.Enum):
    OLS_LP = "ols-lp"
    QLP_NO_CONTROLS = "qlp-no-controls"
    QLP_WITH_CONTROLS = "qlp-with-controls"
    GQR_LP = "gqr-lp"

    @property
    def is_quantile(self) -> bool:
        return self is not EstimatorKind.OLS_LP


@dataclass(frozen=True)
class LpDesign:
    """Which columns play which role in every horizon's regression."""

    outcome: str
    treatment: str
    contemporaneous: tuple[str, ...] = ()
    lagged: tuple[str, ...] = ()
    max_lag: int = 0
    outcome_kind: str = "level"
    timing_restriction: bool = False

    def frame(self, panel: Panel, h: int) -> ProjectionFrame:
        return build_frame(
            panel,
            self.outcome,
            self.treatment,
            self.contemporaneous,
            (self.lagged, self.max_lag),
            h,
            self.outcome_kind,
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d["contemporaneous"] = list(self.contemporaneous)
        d["lagged"] = list(self.lagged)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LpDesign":
        d = dict(d)
        d["contemporaneous"] = tuple(d.get("contemporaneous", ()))
        d["lagged"] = tuple(d.get("lagged", ()))
        return cls(**d)


def estimate_cell(
    frame: ProjectionFrame,
    estimator: EstimatorKind | str,
    tau: float | None = None,
    spec: SqfSpec | str = SqfSpec.LINEAR,
    config: GqrConfig | None = None,
) -> float:
    """Response coefficient on the treatment for one (tau, h) cell.

    For the quadratic specification this is the linear-term coefficient,
    i.e. the response at a zero treatment value.
    """
    estimator = EstimatorKind(estimator)
    spec = SqfSpec(spec)
    terms = frame.treatment_terms(spec.degree)
    if estimator is EstimatorKind.OLS_LP:
        X = np.column_stack([terms, frame.controls])
        coef, *_ = np.linalg.lstsq(X, frame.outcome, rcond=None)
        return float(coef[0])
    if tau is None:
        raise ValueError(f"{estimator.value} needs a quantile level")
    if estimator is EstimatorKind.QLP_NO_CONTROLS:
        X = np.column_stack([np.ones(frame.n_obs), terms])
        return float(fit_qr(X, frame.outcome, tau).coefficients[1])
    if estimator is EstimatorKind.QLP_WITH_CONTROLS:
        X = np.column_stack([terms, frame.controls])
        return float(fit_qr(X, frame.outcome, tau).coefficients[0])
    return float(fit_gqr(frame, tau, spec, config).betas[0])


@dataclass
class QirSurface:
    estimator: EstimatorKind
    quantiles: tuple[float, ...]
    horizons: tuple[int, ...]
    estimates: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def row_labels(self) -> list[float | None]:
        return list(self.quantiles) if self.estimator.is_quantile else [None]

    def set_bands(self, lower: np.ndarray, upper: np.ndarray) -> None:
        """Attach bands, widening them where needed so they bracket the estimate."""
        est = self.estimates
        self.lower = np.where(np.isnan(est), lower, np.fmin(lower, est))
        self.upper = np.where(np.isnan(est), upper, np.fmax(upper, est))

    def rows(self) -> list[dict]:
        out = []
        for i, tau in enumerate(self.row_labels):
            for j, h in enumerate(self.horizons):
                out.append(
                    {
                        "estimator": self.estimator.value,
                        "tau": tau,
                        "h": h,
                        "estimate": self.estimates[i, j],
                        "lower": None if self.lower is None else self.lower[i, j],
                        "upper": None if self.upper is None else self.upper[i, j],
                    }
                )
        return out

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [[None if np.isnan(v) else float(v) for v in r] for r in a]

        return {
            "estimator": self.estimator.value,
            "quantiles": list(self.quantiles),
            "horizons": list(self.horizons),
            "estimates": arr(self.estimates),
            "lower": arr(self.lower),
            "upper": arr(self.upper),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QirSurface":
        def arr(a):
            return None if a is None else np.array([[np.nan if v is None else v for v in r] for r in a], dtype=float)

        return cls(
            EstimatorKind(d["estimator"]),
            tuple(d["quantiles"]),
            tuple(d["horizons"]),
            arr(d["estimates"]),
            arr(d.get("lower")),
            arr(d.get("upper")),
            d.get("metadata", {}),
        )

    @classmethod
    def from_json(cls, path) -> "QirSurface":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class CellError(RuntimeError):
    def __init__(self, tau, h, cause):
        self.tau, self.h, self.cause = tau, h, cause
        label = "mean" if tau is None else f"tau={tau}"
        super().__init__(f"estimation failed at {label}, h={h}: {cause}")


def _cell_job(args):
    panel, design, h, tau, estimator, spec, config, boot, stream, point = args
    try:
        frame = design.frame(panel, h)
        est, msgs = np.nan, []
        if point:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                est = estimate_cell(frame, estimator, tau, spec, config)
            tracked = (GridBoundaryWarning, ThinTailWarning)
            msgs = sorted({str(w.message) for w in caught if issubclass(w.category, tracked)})
        band = None
        if boot is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ci = block_bootstrap_ci(
                    frame, lambda f: estimate_cell(f, estimator, tau, spec, config), boot, stream
                )
            band = (ci.lower, ci.upper)
        return est, band, None, msgs
    except Exception as exc:  # noqa: BLE001 - reported per cell
        return np.nan, None, f"{type(exc).__name__}: {exc}", []


def _run_jobs(jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_cell_job, jobs))
    return [_cell_job(j) for j in jobs]


def run_lp(
    panel: Panel,
    design: LpDesign,
    H: int,
    quantiles=(),
    estimator: EstimatorKind | str = EstimatorKind.GQR_LP,
    spec: SqfSpec | str = SqfSpec.LINEAR,
    config: GqrConfig | None = None,
    bootstrap: BootConfig | None = None,
    timing_restriction: bool | None = None,
    threads: int = 1,
    raise_on_error: bool = True,
) -> QirSurface:
    """Estimate the response surface over horizons 0..H and the given quantiles.

    With the timing restriction on, the h = 0 column is fixed at zero;
    otherwise horizon 0 is estimated like any other. ``bootstrap`` adds
    per-cell block-bootstrap bands, each cell on its own seed stream
    (tau index, h). With ``raise_on_error=False`` failed cells are NaN and
    listed in ``metadata['failures']``.
    """
    estimator = EstimatorKind(estimator)
    spec = SqfSpec(spec)
    config = config or GqrConfig()
    if H < 1:
        raise ValueError("H must be >= 1")
    quantiles = tuple(float(q) for q in quantiles)
    if estimator.is_quantile:
        if not quantiles:
            raise ValueError(f"{estimator.value} needs at least one quantile")
        if any(not 0.0 < q < 1.0 for q in quantiles):
            raise ValueError("quantiles must lie in (0, 1)")
    restrict = design.timing_restriction if timing_restriction is None else timing_restriction
    taus = list(quantiles) if estimator.is_quantile else [None]

    horizons = tuple(range(H + 1))
    est = np.zeros((len(taus), H + 1))
    lower = np.zeros_like(est) if bootstrap is not None else None
    upper = np.zeros_like(est) if bootstrap is not None else None
    jobs, cells = [], []
    for i, tau in enumerate(taus):
        for h in horizons:
            if h == 0 and restrict:
                continue
            jobs.append((panel, design, h, tau, estimator, spec, config, bootstrap, (i, h), True))
            cells.append((i, h))

    results = _run_jobs(jobs, threads)

    failures, notes = [], []
    for (i, h), (value, band, err, msgs) in zip(cells, results):
        if err is not None:
            if raise_on_error:
                raise CellError(taus[i], h, err)
            failures.append({"tau": taus[i], "h": h, "error": err})
        est[i, h] = value
        if band is not None:
            lower[i, h], upper[i, h] = band
        elif bootstrap is not None:
            lower[i, h] = upper[i, h] = np.nan
        notes.extend({"tau": taus[i], "h": h, "warning": m} for m in msgs)

    surface = QirSurface(
        estimator,
        quantiles if estimator.is_quantile else (),
        horizons,
        est,
        metadata={
            "design": design.as_dict(),
            "spec": spec.value,
            "gqr_config": config.as_dict(),
            "timing_restriction": bool(restrict),
            "sample_index": [int(panel.index[0]), int(panel.index[-1])],
            "bootstrap": None if bootstrap is None else asdict(bootstrap),
            "note": CUMULATIVE_NOTE,
            "failures": failures,
            "warnings": notes,
        },
    )
    if bootstrap is not None:
        surface.set_bands(lower, upper)
    return surface


def bootstrap_surface(
    panel: Panel,
    surface: QirSurface,
    bootstrap: BootConfig,
    threads: int = 1,
    raise_on_error: bool = True,
) -> QirSurface:
    """Attach block-bootstrap bands to an existing surface without re-estimating it.

    The design, specification and GQR settings are read from the surface
    metadata; each cell uses the same seed stream as :func:`run_lp` would.
    """
    meta = surface.metadata
    design = LpDesign.from_dict(meta["design"])
    spec = SqfSpec(meta.get("spec", "linear"))
    config = GqrConfig(**meta["gqr_config"]) if meta.get("gqr_config") else GqrConfig()
    restrict = meta.get("timing_restriction", design.timing_restriction)
    taus = surface.row_labels
    lower = np.zeros_like(surface.estimates)
    upper = np.zeros_like(surface.estimates)
    jobs, cells = [], []
    for i, tau in enumerate(taus):
        for j, h in enumerate(surface.horizons):
            if (h == 0 and restrict) or np.isnan(surface.estimates[i, j]):
                lower[i, j] = upper[i, j] = surface.estimates[i, j]
                continue
            jobs.append((panel, design, h, tau, surface.estimator, spec, config, bootstrap, (i, h), False))
            cells.append((i, j))
    failures = []
    for (i, j), (_, band, err, _) in zip(cells, _run_jobs(jobs, threads)):
        if err is not None:
            if raise_on_error:
                raise CellError(taus[i], surface.horizons[j], err)
            failures.append({"tau": taus[i], "h": surface.horizons[j], "error": err})
            lower[i, j] = upper[i, j] = np.nan
        else:
            lower[i, j], upper[i, j] = band
    out = QirSurface(
        surface.estimator, surface.quantiles, surface.horizons, surface.estimates.copy(),
        metadata={**meta, "bootstrap": asdict(bootstrap), "failures": meta.get("failures", []) + failures},
    )
    out.set_bands(lower, upper)
    return out
