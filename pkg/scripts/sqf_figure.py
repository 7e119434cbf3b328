"""Binned structural quantile functions on one long simulated path.

Compares phi = 9 (volatility channel on) with phi = 0 (linear SVAR) at
h = 1, printing the quadratic coefficient of each binned curve. Under
phi = 0 the three curves should be parallel lines with slope -0.25.

    python3 scripts/sqf_figure.py [T] [SEED]
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from qirlab import figures
from qirlab.svar import DgpParams, SimConfig, simulate, sqf_by_binning
from qirlab.svg import write_svg

TAUS = (0.1, 0.5, 0.9)


def main(T: int = 1_000_000, seed: int = 0) -> None:
    out = Path("out/sqf")
    out.mkdir(parents=True, exist_ok=True)
    for phi in (9.0, 0.0):
        path = simulate(DgpParams(phi=phi), SimConfig(T=T, seed=seed))
        b = sqf_by_binning(path, 1, TAUS, 50)
        for tau, q in zip(TAUS, b.quantiles):
            c2, c1, c0 = np.polyfit(b.midpoints, q, 2)
            print(f"phi={phi:g} tau={tau}: intercept {c0:+.3f} slope {c1:+.3f} curvature {c2:+.3f}")
        write_svg(out / f"sqf_phi{phi:g}.svg", figures.sqf_charts([b]), ncols=3,
                  title=f"Binned SQF, phi = {phi:g}, T = {T}")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
