"""Command-line front end: ``qirlab {simulate,mc-table,estimate,bootstrap,report}``."""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import figures
from .bootstrap import BootConfig
from .gqr import GqrConfig, SqfSpec
from .ingest import DatasetManifest, empirical_design, load_panel, prepare_panel, sample_manifest_path
from .lp import EstimatorKind, QirSurface, bootstrap_surface, run_lp
from .output import provenance, write_csv, write_json
from .qr import fit_qr
from .rng import resolve_seed
from .svar import DgpParams, SimConfig, cumulative_outcome, monte_carlo, simulate, sqf_by_binning
from .svg import write_svg

SWEEP_TAUS = "0.05:0.95:0.05"
SURFACE_COLUMNS = ["estimator", "tau", "h", "estimate", "lower", "upper"]


def parse_taus(text: str) -> tuple[float, ...]:
    """``0.1,0.5,0.9`` or an inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(p) for p in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("tau step must be positive")
        n = int(round((stop - start) / step)) + 1
        taus = tuple(round(start + k * step, 10) for k in range(n))
    else:
        taus = tuple(float(p) for p in text.split(",") if p.strip())
    if not taus or any(not 0.0 < t < 1.0 for t in taus):
        raise argparse.ArgumentTypeError(f"quantiles must lie in (0, 1): {text!r}")
    return taus


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_failures(failures: list[dict]) -> int:
    for f in failures:
        label = "mean" if f.get("tau") is None else f"tau={f['tau']}"
        print(f"failed cell {label} h={f['h']}: {f['error']}", file=sys.stderr)
    return 1 if failures else 0


def _write_surface(out: Path, surface: QirSurface, prov: dict, stem: str = "qir_surface") -> None:
    write_csv(out / f"{stem}.csv", surface.rows(), SURFACE_COLUMNS, prov)
    write_json(out / f"{stem}.json", surface.to_dict(), prov)


def _write_surface_figures(out: Path, surface: QirSurface, prov: dict) -> list[Path]:
    written = [write_svg(out / "qir_paths.svg", figures.horizon_paths(surface), ncols=2,
                         title="Cumulative response by horizon", meta=prov)]
    sweeps = figures.quantile_sweeps(surface)
    if sweeps and len(surface.quantiles) > 1:
        written.append(write_svg(out / "qir_sweep.svg", sweeps, ncols=2,
                                 title="Response across quantiles", meta=prov))
    return written


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    seed = resolve_seed(args.seed)
    params = DgpParams(phi=args.phi)
    sim = SimConfig(T=args.T, burn_in=args.burn_in, seed=seed, mc_reps=2)
    taus = args.taus
    cfg = {"command": "simulate", "params": params.as_dict(), "sim": asdict(sim), "taus": taus,
           "horizons": args.horizons, "bins": args.bins}
    prov = provenance(cfg, seed)
    out = _out_dir(args.out)
    path = simulate(params, sim)

    write_csv(out / "sim_path.csv",
              [{"t": t, "Y": path.Y[t], "D": path.D[t], "ZY": path.Z_Y[t], "ZD": path.Z_D[t]} for t in range(len(path))],
              ["t", "Y", "D", "ZY", "ZD"], prov)

    bins, fit_rows, binned = [], [], []
    for h in range(1, args.horizons + 1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            b = sqf_by_binning(path, h, taus, args.bins)
        binned.append(b)
        for i, tau in enumerate(b.taus):
            for k in range(len(b.midpoints)):
                bins.append({"tau": tau, "h": h, "bin": k, "midpoint": b.midpoints[k],
                             "quantile": b.quantiles[i, k], "count": int(b.counts[k])})
        yc = cumulative_outcome(path.Y, h)
        z = path.Z_D[: yc.shape[0]]
        for tau in b.taus:
            for spec in (SqfSpec.LINEAR, SqfSpec.QUADRATIC):
                X = np.column_stack([z ** p for p in range(spec.degree + 1)])
                c = fit_qr(X, yc, tau).coefficients
                fit_rows.append({"tau": tau, "h": h, "spec": spec.value, "intercept": c[0], "slope": c[1],
                                 "curvature": c[2] if spec.degree == 2 else 0.0})
    write_csv(out / "sqf_bins.csv", bins, ["tau", "h", "bin", "midpoint", "quantile", "count"], prov)
    write_csv(out / "sqf_fits.csv", fit_rows, ["tau", "h", "spec", "intercept", "slope", "curvature"], prov)
    write_svg(out / "sqf.svg", figures.sqf_charts(binned, fit_rows), ncols=3,
              title="Binned structural quantile function", meta=prov)
    write_json(out / "simulate.json", {"config": cfg, "files": ["sim_path.csv", "sqf_bins.csv", "sqf_fits.csv", "sqf.svg"]}, prov)
    return 0


# -- mc-table ----------------------------------------------------------------

def cmd_mc_table(args) -> int:
    seed = resolve_seed(args.seed)
    params = DgpParams(phi=args.phi)
    sim = SimConfig(T=args.T, burn_in=args.burn_in, seed=seed, mc_reps=args.mc_reps)
    estimators = [EstimatorKind(e) for e in args.estimators.split(",")]
    cfg = {"command": "mc-table", "params": params.as_dict(), "sim": asdict(sim), "taus": args.taus,
           "horizons": args.horizons, "spec": args.spec, "estimators": [e.value for e in estimators]}
    prov = provenance(cfg, seed)
    out = _out_dir(args.out)
    try:
        table = monte_carlo(params, sim, estimators, args.horizons, args.taus, args.spec, threads=args.threads)
    except RuntimeError as exc:
        print(f"mc-table failed: {exc}", file=sys.stderr)
        return 1
    write_csv(out / "mc_table.csv", table.rows(), ["quantile", "horizon", "estimator", "mean_bias", "rmse"], prov)
    write_json(out / "mc_table.json", {
        "config": cfg,
        "metadata": table.metadata,
        "failures": table.failures,
        "taus": table.taus,
        "horizons": table.horizons,
        "mean_estimates": {n: table.mean_estimate(n) for n in table.estimates},
        "truth": table.truth,
    }, prov)
    write_svg(out / "mc_qir.svg", figures.mc_charts(table), ncols=3,
              title="Mean estimated response against the benchmark", meta=prov)
    return 0


# -- estimate / bootstrap / report --------------------------------------------

def _load_empirical(manifest_path, treatment):
    manifest = DatasetManifest.load(manifest_path)
    panel = prepare_panel(load_panel(manifest), manifest, treatment)
    return manifest, panel, empirical_design(panel, manifest)


def cmd_estimate(args) -> int:
    seed = resolve_seed(args.seed)
    manifest_path = Path(args.manifest) if args.manifest else sample_manifest_path()
    boot = None
    if args.boot_reps > 0:
        boot = BootConfig(args.block_length, args.boot_reps, args.level, seed)
    manifest, panel, design = _load_empirical(manifest_path, args.treatment)
    estimator = EstimatorKind(args.estimator)
    gqr_config = GqrConfig()
    cfg = {"command": "estimate", "manifest": str(manifest_path), "treatment": args.treatment,
           "horizons": args.horizons, "taus": args.taus, "spec": args.spec, "estimator": estimator.value,
           "design": design.as_dict(), "gqr_config": gqr_config.as_dict(),
           "bootstrap": None if boot is None else asdict(boot)}
    prov = provenance(cfg, seed)
    out = _out_dir(args.out)
    surface = run_lp(panel, design, args.horizons, args.taus, estimator, args.spec, gqr_config,
                     bootstrap=boot, threads=args.threads, raise_on_error=False)
    surface.metadata.update({"manifest": str(manifest_path), "treatment": args.treatment, "seed": seed,
                             "config_hash": prov["config_hash"], "n_obs": len(panel)})
    _write_surface(out, surface, prov)
    _write_surface_figures(out, surface, prov)
    return _report_failures(surface.metadata["failures"])


def cmd_bootstrap(args) -> int:
    seed = resolve_seed(args.seed)
    surface = QirSurface.from_json(args.surface)
    meta = surface.metadata
    manifest_path = args.manifest or meta.get("manifest")
    treatment = args.treatment or meta.get("treatment")
    if manifest_path is None or treatment is None:
        print("surface metadata lacks manifest/treatment; pass --manifest and --treatment", file=sys.stderr)
        return 2
    _, panel, _ = _load_empirical(manifest_path, treatment)
    boot = BootConfig(args.block_length, args.boot_reps, args.level, seed)
    cfg = {"command": "bootstrap", "surface_config_hash": meta.get("config_hash"),
           "manifest": str(manifest_path), "treatment": treatment, "bootstrap": asdict(boot)}
    prov = provenance(cfg, seed)
    out = _out_dir(args.out)
    banded = bootstrap_surface(panel, surface, boot, threads=args.threads, raise_on_error=False)
    banded.metadata.update({"seed": seed, "config_hash": prov["config_hash"]})
    _write_surface(out, banded, prov)
    _write_surface_figures(out, banded, prov)
    return _report_failures(banded.metadata["failures"])


def cmd_report(args) -> int:
    surface = QirSurface.from_json(args.surface)
    meta = surface.metadata
    seed = meta.get("seed")
    prov = provenance({"command": "report", "surface_config_hash": meta.get("config_hash")}, seed)
    out = _out_dir(args.out)
    for p in _write_surface_figures(out, surface, prov):
        print(p)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qirlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--seed", type=int, default=None, help="master seed (default $QIRLAB_SEED, else 0)")
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--threads", type=_positive_int, default=1, help="worker processes")

    def boot_flags(sp, reps_default):
        sp.add_argument("--block-length", type=_positive_int, default=7)
        sp.add_argument("--boot-reps", type=int, default=reps_default, help="0 disables bands")
        sp.add_argument("--level", type=float, default=0.90)

    s = sub.add_parser("simulate", help="simulate the SVAR and bin its structural quantile function")
    common(s, "out/simulate")
    s.add_argument("--phi", type=float, default=DgpParams.phi)
    s.add_argument("--T", type=_positive_int, default=100_000, help="retained sample length")
    s.add_argument("--burn-in", type=int, default=1000)
    s.add_argument("--horizons", type=_positive_int, default=1, help="bin horizons 1..H")
    s.add_argument("--taus", type=parse_taus, default=(0.1, 0.5, 0.9))
    s.add_argument("--bins", type=_positive_int, default=50)
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mc-table", help="Monte Carlo bias/RMSE table for the cumulative response")
    common(m, "out/mc-table")
    m.add_argument("--mc-reps", type=_positive_int, default=100)
    m.add_argument("--phi", type=float, default=DgpParams.phi)
    m.add_argument("--T", type=_positive_int, default=1000)
    m.add_argument("--burn-in", type=int, default=1000)
    m.add_argument("--horizons", type=_positive_int, default=10)
    m.add_argument("--taus", type=parse_taus, default=(0.1, 0.5, 0.9))
    m.add_argument("--spec", choices=[s.value for s in SqfSpec], default="linear")
    m.add_argument("--estimators", default="qlp-no-controls,qlp-with-controls,gqr-lp")
    m.set_defaults(func=cmd_mc_table)

    e = sub.add_parser("estimate", help="estimate the empirical response surface")
    common(e, "out/estimate")
    e.add_argument("--manifest", default=None, help="dataset manifest (default: bundled synthetic sample)")
    e.add_argument("--treatment", default="credit-risk", help="credit-risk, volatility-risk or a column name")
    e.add_argument("--horizons", type=_positive_int, default=24)
    e.add_argument("--taus", type=parse_taus, default=parse_taus(SWEEP_TAUS))
    e.add_argument("--spec", choices=[s.value for s in SqfSpec], default="linear")
    e.add_argument("--estimator", choices=[k.value for k in EstimatorKind], default="gqr-lp")
    boot_flags(e, 1000)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bootstrap", help="add bootstrap bands to an existing surface")
    common(b, "out/bootstrap")
    b.add_argument("--surface", required=True, help="surface JSON written by estimate")
    b.add_argument("--manifest", default=None)
    b.add_argument("--treatment", default=None)
    boot_flags(b, 1000)
    b.set_defaults(func=cmd_bootstrap)

    r = sub.add_parser("report", help="redraw figures for an existing surface")
    r.add_argument("--surface", required=True)
    r.add_argument("--out", default="out/report")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "boot_reps", 0) < 0:
        print("--boot-reps must be >= 0", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, RuntimeError, FloatingPointError) as exc:
        print(f"qirlab {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
