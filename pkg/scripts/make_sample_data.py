"""Regenerate the bundled synthetic monthly dataset.

The series share the empirical schema (two CSV files joined on ``date``)
but come from a small recursive simulation with credit-spread-driven
volatility in output growth. They are not real data.

    python3 scripts/make_sample_data.py [OUTDIR]
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from qirlab.ingest import month_label, month_index

MACRO_START, FIN_START, END = "1984-01", "1984-07", "2023-08"
SEED = 20231


def simulate(n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    e = rng.standard_normal((n, 10))
    cols = {k: np.zeros(n) for k in (
        "cons_growth", "inv_growth", "ip_growth", "inflation", "EBP",
        "realized_vol", "implied_vol", "sp500_ret", "d_gs10", "d_fedfunds")}
    c = cols
    for t in range(1, n):
        stress = max(c["EBP"][t - 1], 0.0)
        vol = 0.5 * (1.0 + 1.5 * stress)
        c["ip_growth"][t] = (0.15 + 0.25 * c["ip_growth"][t - 1]
                             - 0.4 * (c["EBP"][t - 1] - c["EBP"][max(t - 2, 0)])
                             + vol * e[t, 0] - 0.6 * stress * abs(e[t, 1]))
        c["cons_growth"][t] = 0.2 + 0.3 * c["ip_growth"][t] + 0.3 * e[t, 2]
        c["inv_growth"][t] = 0.1 + 1.2 * c["ip_growth"][t] + 0.8 * e[t, 3]
        c["inflation"][t] = 0.2 + 0.5 * c["inflation"][t - 1] + 0.15 * e[t, 4]
        c["EBP"][t] = 0.9 * c["EBP"][t - 1] - 0.05 * c["ip_growth"][t] + 0.2 * e[t, 5]
        c["implied_vol"][t] = 18.0 + 0.8 * (c["implied_vol"][t - 1] - 18.0) + 4.0 * stress + 1.5 * e[t, 6]
        c["realized_vol"][t] = c["implied_vol"][t] - 2.0 + 3.0 * e[t, 7] + 3.0 * stress
        c["sp500_ret"][t] = 0.6 - 0.3 * (c["realized_vol"][t] - c["implied_vol"][t]) + 3.5 * e[t, 8]
        c["d_gs10"][t] = -0.02 * c["EBP"][t] + 0.2 * e[t, 9]
        c["d_fedfunds"][t] = 0.3 * c["d_fedfunds"][t - 1] + 0.05 * c["inflation"][t] - 0.01 + 0.1 * e[t, 9]
    c["INDPRO"] = 60.0 * np.exp(np.cumsum(c.pop("ip_growth")) / 100.0)
    return cols


def write(path: Path, months: range, columns: dict[str, np.ndarray]) -> None:
    lines = ["date," + ",".join(columns)]
    for i, m in enumerate(months):
        lines.append(month_label(m) + "," + ",".join(f"{v[i]:.6f}" for v in columns.values()))
    path.write_text("\n".join(lines) + "\n")


def main(out: Path) -> None:
    start, fin, end = (month_index(s) for s in (MACRO_START, FIN_START, END))
    months = range(start, end + 1)
    c = simulate(len(months), np.random.default_rng(SEED))
    macro = {k: c[k] for k in ("cons_growth", "inv_growth", "INDPRO", "inflation")}
    cut = fin - start
    fin_cols = {k: c[k][cut:] for k in ("EBP", "realized_vol", "implied_vol", "sp500_ret", "d_gs10", "d_fedfunds")}
    out.mkdir(parents=True, exist_ok=True)
    write(out / "macro.csv", months, macro)
    write(out / "financial.csv", range(fin, end + 1), fin_cols)


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "qirlab" / "data" / "sample"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
