"""Structural quantile impulse responses via generalized quantile regression in local projections."""
from .bootstrap import BootConfig, BootInterval, block_bootstrap_ci, block_indices, percentile_interval
from .binary import BinaryFit, BinaryFitError, LinkKind, fit_binary
from .gqr import (
    GqrConfig,
    GqrFit,
    GridBoundaryWarning,
    ScalingConditionWarning,
    SqfSpec,
    ThinTailWarning,
    fit_gqr,
    gqr_objective,
)
from .ingest import (
    DatasetManifest,
    empirical_design,
    load_panel,
    make_credit_risk,
    make_volatility_risk,
    prepare_panel,
    sample_manifest_path,
)
from .lp import CellError, EstimatorKind, LpDesign, QirSurface, bootstrap_surface, estimate_cell, run_lp
from .qr import QrFit, check_loss, fit_qr
from .svar import DgpParams, McTable, SimConfig, SimPath, monte_carlo, oracle_qir, simulate, sqf_by_binning
from .timeseries import Panel, ProjectionFrame, TransformSpec, build_frame, cumulative_log_growth, z_score

__version__ = "0.1.0"
