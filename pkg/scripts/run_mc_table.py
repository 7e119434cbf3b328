"""Monte Carlo bias/RMSE table for the cumulative quantile response.

Defaults match the acceptance run (100 replications, T=1000, burn-in
1000, horizons 1..10); pass ``--mc-reps 1000`` for the full-size table.

    python3 scripts/run_mc_table.py [--mc-reps N] [--threads N] [--out DIR]
"""
from __future__ import annotations

import sys

from qirlab.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "out/mc_table"]
    sys.exit(main(["mc-table", *args]))
