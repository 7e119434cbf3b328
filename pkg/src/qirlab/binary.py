"""Ridge-penalised logit/probit fits of a binary indicator on controls."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_ndtr, ndtr, ndtri

DEFAULT_RIDGE = 1e-6
MAX_RIDGE = 1e-2
_P_FLOOR = 1e-12
_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


class LinkKind(str, enum.Enum):
    LOGIT = "logit"
    PROBIT = "probit"


class BinaryFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class BinaryFit:
    link: LinkKind
    coefficients: np.ndarray
    fitted_probabilities: np.ndarray
    converged: bool
    ridge: float = DEFAULT_RIDGE


def penalty_mask(W: np.ndarray) -> np.ndarray:
    """True for columns that are penalised (every non-constant column)."""
    const = np.all(W == W[:1], axis=0) & (W[0] != 0)
    if not const.any():
        raise ValueError("W must contain an intercept column")
    return ~const


def _loglik(eta: np.ndarray, Y: np.ndarray, link: LinkKind) -> np.ndarray:
    if link is LinkKind.LOGIT:
        return np.sum(Y * eta - np.logaddexp(0.0, eta), axis=0)
    return np.sum(Y * log_ndtr(eta) + (1 - Y) * log_ndtr(-eta), axis=0)


def _score_weights(eta: np.ndarray, Y: np.ndarray, link: LinkKind):
    """Per-observation score factor and (expected) information weight."""
    if link is LinkKind.LOGIT:
        p = expit(eta)
        return Y - p, p * (1 - p)
    log_phi = -0.5 * eta**2 - _LOG_SQRT_2PI
    lo, hi = log_ndtr(eta), log_ndtr(-eta)
    r_pos = np.exp(log_phi - lo)
    r_neg = np.exp(log_phi - hi)
    return Y * r_pos - (1 - Y) * r_neg, r_pos * r_neg


def _probabilities(eta: np.ndarray, link: LinkKind) -> np.ndarray:
    p = expit(eta) if link is LinkKind.LOGIT else ndtr(eta)
    return np.clip(p, _P_FLOOR, 1 - _P_FLOOR)


def _newton(W, Y, B, link, ridge, pen, tol, max_iter, WW):
    """Damped Newton (Fisher scoring for probit) on every column of Y at once.

    Returns the coefficient matrix (k x G) and a converged mask.
    """
    k, G = B.shape
    P2 = 2.0 * ridge * pen.astype(float)
    obj = _loglik(W @ B, Y, link) - ridge * np.sum(pen[:, None] * B**2, axis=0)
    converged = np.zeros(G, dtype=bool)
    active = np.arange(G)
    for _ in range(max_iter):
        Ba = B[:, active]
        s, w = _score_weights(W @ Ba, Y[:, active], link)
        grad = W.T @ s - P2[:, None] * Ba
        gnorm = np.linalg.norm(grad, axis=0)
        done = gnorm <= tol
        H = (w.T @ WW).reshape(-1, k, k) + np.diag(P2)[None]
        try:
            step = np.linalg.solve(H, grad.T[..., None])[..., 0].T
        except np.linalg.LinAlgError:
            step = (np.linalg.pinv(H) @ grad.T[..., None])[..., 0].T
        # Stalled at machine precision also counts as converged.
        tiny = np.max(np.abs(step), axis=0) <= 1e-12 * (1 + np.max(np.abs(Ba), axis=0))
        done |= tiny
        converged[active[done]] = True
        keep = ~done
        if not keep.any():
            break
        active, Ba, step = active[keep], Ba[:, keep], step[:, keep]
        old = obj[active]
        t = np.ones(active.size)
        trial = Ba + step
        new = _loglik(W @ trial, Y[:, active], link) - ridge * np.sum(pen[:, None] * trial**2, axis=0)
        for _ in range(40):
            bad = ~(new >= old - 1e-12 * np.abs(old))
            if not bad.any():
                break
            t[bad] *= 0.5
            trial[:, bad] = Ba[:, bad] + t[bad] * step[:, bad]
            new[bad] = _loglik(W @ trial[:, bad], Y[:, active[bad]], link) - ridge * np.sum(
                pen[:, None] * trial[:, bad] ** 2, axis=0
            )
        B[:, active] = trial
        obj[active] = new
    return B, converged


def _degenerate(W, y, link, pen):
    T = y.shape[0]
    p = 1.0 / (T + 1) if y.sum() == 0 else T / (T + 1.0)
    j = int(np.flatnonzero(~pen)[0])
    b = np.zeros(W.shape[1])
    eta = np.log(p / (1 - p)) if link is LinkKind.LOGIT else float(ndtri(p))
    b[j] = eta / W[0, j]
    return BinaryFit(link, b, np.full(T, p), True, 0.0)


def fit_binary_many(
    W,
    indicators,
    link: LinkKind | str = LinkKind.LOGIT,
    ridge: float = DEFAULT_RIDGE,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> np.ndarray:
    """Fitted probabilities (T x G) for G indicator columns sharing one design.

    Columns that fail to converge are refitted one at a time with the
    escalating-ridge fallback of :func:`fit_binary`.
    """
    link = LinkKind(link)
    W = np.asarray(W, dtype=float)
    Y = np.asarray(indicators, dtype=float)
    T, k = W.shape
    pen = penalty_mask(W)
    P = np.empty_like(Y)
    sums = Y.sum(axis=0)
    degenerate = (sums == 0) | (sums == T)
    for g in np.flatnonzero(degenerate):
        P[:, g] = _degenerate(W, Y[:, g], link, pen).fitted_probabilities
    live = np.flatnonzero(~degenerate)
    if live.size:
        WW = (W[:, :, None] * W[:, None, :]).reshape(T, k * k)
        B0 = _start(W, Y[:, live], link, pen)
        B, conv = _newton(W, Y[:, live], B0, link, ridge, pen, tol, max_iter, WW)
        P[:, live] = _probabilities(W @ B, link)
        for g in live[~conv]:
            P[:, g] = fit_binary(W, Y[:, g], link, ridge, tol, max_iter).fitted_probabilities
    return P


def _start(W, Y, link, pen):
    """Intercept-only starting values."""
    k = W.shape[1]
    G = Y.shape[1]
    B = np.zeros((k, G))
    j = int(np.flatnonzero(~pen)[0])
    m = np.clip(Y.mean(axis=0), 1e-6, 1 - 1e-6)
    eta = np.log(m / (1 - m)) if link is LinkKind.LOGIT else ndtri(m)
    B[j] = eta / W[0, j]
    return B


def fit_binary(
    W,
    indicator,
    link: LinkKind | str = LinkKind.LOGIT,
    ridge: float = DEFAULT_RIDGE,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> BinaryFit:
    """Maximise the ridge-penalised binary log-likelihood by Newton's method.

    The penalty ``ridge * ||b||^2`` skips the intercept column. If Newton
    does not reach ``||grad|| <= tol`` within ``max_iter`` iterations the
    ridge is multiplied by 10 and the fit restarted from the last iterate,
    up to 1e-2. An all-zero or all-one indicator gives the degenerate fit
    with probabilities clamped to 1/(T+1) or T/(T+1).
    """
    link = LinkKind(link)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    y = np.asarray(indicator, dtype=float)
    T, k = W.shape
    if y.shape != (T,):
        raise ValueError("indicator length does not match W")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("indicator must be 0/1")
    if T <= k:
        raise ValueError(f"need more observations than columns (T={T}, k={k})")
    pen = penalty_mask(W)
    if y.sum() in (0, T):
        return _degenerate(W, y, link, pen)

    WW = (W[:, :, None] * W[:, None, :]).reshape(T, k * k)
    Y = y[:, None]
    B = _start(W, Y, link, pen)
    lam = ridge
    while True:
        B, conv = _newton(W, Y, B, link, lam, pen, tol, max_iter, WW)
        if conv[0]:
            b = B[:, 0]
            return BinaryFit(link, b, _probabilities(W @ b, link), True, lam)
        if lam >= MAX_RIDGE:
            raise BinaryFitError(f"binary fit failed: no convergence with ridge up to {MAX_RIDGE}")
        lam = DEFAULT_RIDGE if lam < DEFAULT_RIDGE else min(MAX_RIDGE, lam * 10)
