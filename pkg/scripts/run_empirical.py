"""Credit-risk and volatility-risk response surfaces for one manifest.

    python3 scripts/run_empirical.py [MANIFEST] [--boot-reps B] [--threads N]

Without a manifest the bundled synthetic sample is used, so the output
illustrates the pipeline only.
"""
from __future__ import annotations

import sys

from qirlab.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    manifest = [] if not argv or argv[0].startswith("--") else ["--manifest", argv.pop(0)]
    code = 0
    for treatment in ("credit-risk", "volatility-risk"):
        code |= main(["estimate", *manifest, "--treatment", treatment, "--out", f"out/{treatment}", *argv])
    sys.exit(code)
