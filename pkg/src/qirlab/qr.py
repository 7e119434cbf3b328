"""Linear quantile regression by exact linear programming."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog


@dataclass(frozen=True)
class QrFit:
    tau: float
    coefficients: np.ndarray
    objective: float


def check_loss(u, tau: float) -> float:
    """Sum of rho_tau(u) = u * (tau - 1{u < 0})."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(u * (tau - (u < 0))))


def _validate(X: np.ndarray, y: np.ndarray, tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be T x k with T = len(y)")
    T, k = X.shape
    if T <= k:
        raise ValueError(f"need more observations than regressors (T={T}, k={k})")
    if np.linalg.matrix_rank(X) < k:
        raise ValueError("design matrix is rank deficient")


def fit_qr(X, y, tau: float) -> QrFit:
    """Minimise the check loss of ``y - X b`` over ``b``.

    Solved through the dual LP ``max y'a`` subject to
    ``X'a = (1 - tau) X'1``, ``0 <= a <= 1``; the coefficients are the
    multipliers of the equality constraints. HiGHS runs interior point with
    crossover, so the solution is a vertex of the primal problem.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    _validate(X, y, tau)

    # Rescale for conditioning; map back afterwards.
    scale_y = max(float(np.abs(y).max()), 1e-300)
    col_scale = np.abs(X).max(axis=0)
    col_scale[col_scale == 0] = 1.0
    Xs = X / col_scale
    res = linprog(
        -y / scale_y,
        A_eq=Xs.T,
        b_eq=(1.0 - tau) * Xs.sum(axis=0),
        bounds=(0.0, 1.0),
        method="highs-ipm",
    )
    if res.status != 0:
        raise RuntimeError(f"quantile regression LP failed: {res.message}")
    beta = -res.eqlin.marginals / col_scale * scale_y
    return QrFit(tau=tau, coefficients=beta, objective=check_loss(y - X @ beta, tau))
