"""Fixed figure layouts for response surfaces, SQF curves and Monte Carlo tables."""
from __future__ import annotations

import numpy as np

from .lp import QirSurface
from .svar import BinnedSqf, McTable
from .svg import PALETTE, Chart, Layer

PATH_TAUS = (0.1, 0.5, 0.9)
SWEEP_HORIZONS = (6, 12, 18, 24)


def _tau_rows(surface: QirSurface, wanted) -> list[tuple[int, float]]:
    rows = [(i, t) for i, t in enumerate(surface.quantiles) if any(abs(t - w) < 1e-9 for w in wanted)]
    if not rows:
        rows = list(enumerate(surface.quantiles))
    return rows


def horizon_paths(surface: QirSurface, taus=PATH_TAUS) -> list[Chart]:
    """One overlay panel plus one banded panel per quantile, responses against horizon."""
    h = np.asarray(surface.horizons, dtype=float)
    if not surface.estimator.is_quantile:
        layers = []
        if surface.lower is not None:
            layers.append(Layer("band", h, surface.lower[0], surface.upper[0]))
        layers.append(Layer("line", h, surface.estimates[0], label="mean"))
        return [Chart("Mean response", layers, "horizon", "response")]
    rows = _tau_rows(surface, taus)
    overlay = Chart(
        "All quantiles",
        [Layer("line", h, surface.estimates[i], label=f"tau={t:g}", color=PALETTE[k % len(PALETTE)])
         for k, (i, t) in enumerate(rows)],
        "horizon", "response",
    )
    charts = [overlay]
    for k, (i, t) in enumerate(rows):
        color = PALETTE[k % len(PALETTE)]
        layers = []
        if surface.lower is not None:
            layers.append(Layer("band", h, surface.lower[i], surface.upper[i], color=color))
        layers.append(Layer("line", h, surface.estimates[i], label=f"tau={t:g}", color=color))
        charts.append(Chart(f"tau = {t:g}", layers, "horizon", "response"))
    return charts


def quantile_sweeps(surface: QirSurface, horizons=SWEEP_HORIZONS) -> list[Chart]:
    """Responses against tau at selected horizons (those present in the surface)."""
    taus = np.asarray(surface.quantiles, dtype=float)
    charts = []
    for h in horizons:
        if h not in surface.horizons:
            continue
        j = surface.horizons.index(h)
        layers = []
        if surface.lower is not None:
            layers.append(Layer("band", taus, surface.lower[:, j], surface.upper[:, j]))
        layers.append(Layer("line", taus, surface.estimates[:, j], label=f"h={h}"))
        layers.append(Layer("points", taus, surface.estimates[:, j]))
        charts.append(Chart(f"h = {h}", layers, "tau", "response"))
    return charts


def sqf_charts(binned: list[BinnedSqf], fits: list[dict] | None = None) -> list[Chart]:
    """Binned SQF points per (tau, h), overlaid with fitted linear and quadratic SQFs.

    ``fits`` rows carry ``tau``, ``h``, ``spec`` and the polynomial
    coefficients ``intercept``, ``slope``, ``curvature``.
    """
    fits = fits or []
    charts = []
    for b in binned:
        x = b.midpoints
        grid = np.linspace(x.min(), x.max(), 60)
        for i, tau in enumerate(b.taus):
            layers = [Layer("points", x, b.quantiles[i], label="binned quantile")]
            for k, f in enumerate(r for r in fits if r["h"] == b.horizon and abs(r["tau"] - tau) < 1e-12):
                curve = f["intercept"] + f["slope"] * grid + f["curvature"] * grid ** 2
                layers.append(Layer("line", grid, curve, label=f"{f['spec']} fit",
                                    color=PALETTE[1 + k % (len(PALETTE) - 1)], dashed=k > 0))
            charts.append(Chart(f"tau = {tau:g}, h = {b.horizon}", layers,
                                "structural shock", "cumulative outcome quantile", zero_line=False))
    return charts


def mc_charts(table: McTable) -> list[Chart]:
    """Mean estimate per estimator against the benchmark across horizons, one panel per tau."""
    h = np.asarray(table.horizons, dtype=float)
    charts = []
    quantile_names = [n for n in table.estimates if table._row_taus(n) != [None]]
    for i, tau in enumerate(table.taus):
        layers = []
        if quantile_names:
            layers.append(Layer("line", h, table.truth[quantile_names[0]][i], label="benchmark", color="#000000"))
        for k, name in enumerate(quantile_names):
            layers.append(Layer("line", h, table.mean_estimate(name)[i], label=name,
                                color=PALETTE[k % len(PALETTE)], dashed=True))
        charts.append(Chart(f"tau = {tau:g}", layers, "horizon", "cumulative response"))
    return charts
