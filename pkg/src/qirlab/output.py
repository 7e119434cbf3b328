"""Deterministic CSV/JSON writers that stamp provenance into every file."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

PACKAGE = "qirlab"
DISTRIBUTION = "artifact"


def versions() -> dict[str, str]:
    try:
        own = metadata.version(DISTRIBUTION)
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {PACKAGE: own, "numpy": np.__version__, "scipy": scipy.__version__}


def _plain(obj):
    """Make ``obj`` JSON-serialisable with a stable representation."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, str)):
        return obj.value
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(config: dict, seed: int | None) -> dict:
    return {"config_hash": config_hash(config), "seed": seed, "versions": versions()}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, rows: list[dict], columns: list[str], prov: dict) -> Path:
    """Write ``rows`` as CSV preceded by ``#`` provenance comment lines.

    Missing values are empty fields. Line endings are CRLF as in RFC 4180.
    """
    buf = io.StringIO()
    buf.write(f"# config_hash={prov['config_hash']}\r\n")
    buf.write(f"# seed={prov['seed']}\r\n")
    buf.write("# versions=" + ";".join(f"{k}={v}" for k, v in prov["versions"].items()) + "\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    path = Path(path)
    path.write_bytes(buf.getvalue().encode())
    return path


def read_csv(path):
    """Read a file written by :func:`write_csv` into (provenance lines, DataFrame)."""
    import pandas as pd

    text = Path(path).read_text()
    header = [ln[2:] for ln in text.splitlines() if ln.startswith("# ")]
    return header, pd.read_csv(io.StringIO(text), comment="#", float_precision="round_trip")


def write_json(path, payload: dict, prov: dict) -> Path:
    doc = dict(_plain(payload))
    doc["provenance"] = prov
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
