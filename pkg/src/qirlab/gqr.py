"""Generalized quantile regression for the treatment-only structural quantile function.

For a candidate slope vector the intercept is pinned down by the coverage
condition (the fitted quantile line must have fraction tau of outcomes at
or below it). The indicator of falling below the line is then modelled on
the controls with a binary-response fit, and the slope is chosen to make
the treatment orthogonal to the indicator's unexplained part. The
minimisation over slopes is a refined grid search.

Under the default ``inverted_cdf`` intercept rule the intercept is the
k-th order statistic of the residuals, k = ceil(tau T), and that one
observation enters the indicator with weight tau T - (k - 1) instead of 1.
The indicator then averages exactly tau, and with intercept-only controls
T g equals the derivative of the profiled check loss, so the estimator
coincides with quantile regression up to the grid step. Other numpy
quantile rules use the plain 0/1 indicator.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .binary import DEFAULT_RIDGE, LinkKind, fit_binary_many
from .qr import fit_qr
from .timeseries import ProjectionFrame


class SqfSpec(str, enum.Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"

    @property
    def degree(self) -> int:
        return 1 if self is SqfSpec.LINEAR else 2


class GridBoundaryWarning(UserWarning):
    """The first-stage incumbent sat on the edge of the search grid."""


class ThinTailWarning(UserWarning):
    """Fewer than ``min_tail`` observations expected in a quantile tail."""


class ScalingConditionWarning(UserWarning):
    """Empirical coverage of the fitted intercept is further than 1/T from tau."""


@dataclass(frozen=True)
class GqrConfig:
    link: LinkKind = LinkKind.LOGIT
    weighting: np.ndarray | None = None
    grid_points: int = 101
    grid_halfwidth_factor: float = 5.0
    refinements: int = 2
    shrink: float = 10.0
    quadratic_grid_points: int = 41
    quantile_definition: str = "inverted_cdf"
    ridge: float = DEFAULT_RIDGE
    min_tail: int = 5
    max_expansions: int = 20

    def __post_init__(self):
        object.__setattr__(self, "link", LinkKind(self.link))
        for n in (self.grid_points, self.quadratic_grid_points):
            if n < 11 or n % 2 == 0:
                raise ValueError(f"grid points must be odd and >= 11, got {n}")
        if self.refinements < 0:
            raise ValueError("refinements must be >= 0")
        if self.max_expansions < 0:
            raise ValueError("max_expansions must be >= 0")
        if self.shrink <= 1:
            raise ValueError("shrink factor must exceed 1")
        np.quantile([0.0, 1.0], 0.5, method=self.quantile_definition)

    def as_dict(self) -> dict:
        return {
            "link": self.link.value,
            "weighting": None if self.weighting is None else np.asarray(self.weighting).tolist(),
            "grid_points": self.grid_points,
            "grid_halfwidth_factor": self.grid_halfwidth_factor,
            "refinements": self.refinements,
            "shrink": self.shrink,
            "quadratic_grid_points": self.quadratic_grid_points,
            "quantile_definition": self.quantile_definition,
            "ridge": self.ridge,
            "min_tail": self.min_tail,
            "max_expansions": self.max_expansions,
        }


@dataclass(frozen=True)
class GqrFit:
    tau: float
    horizon: int
    alpha: float
    betas: np.ndarray
    objective: float
    grid_resolution: float
    coverage: float
    moment: np.ndarray
    n_obs: int
    center: np.ndarray
    on_boundary: bool = False
    stage_objectives: tuple[float, ...] = ()
    trace: list = field(default_factory=list, repr=False)


def solve_intercept(outcome, treatment, betas, tau: float, spec=SqfSpec.LINEAR, qdef: str = "inverted_cdf") -> float:
    """Empirical tau-quantile of ``outcome - sum_j betas[j] * treatment**(j+1)``."""
    y = np.asarray(outcome, dtype=float)
    d = np.asarray(treatment, dtype=float)
    if y.shape != d.shape:
        raise ValueError("outcome and treatment lengths differ")
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    spec = SqfSpec(spec)
    if betas.shape[0] != spec.degree:
        raise ValueError(f"{spec.value} spec needs {spec.degree} slope(s)")
    resid = y - sum(b * d ** (j + 1) for j, b in enumerate(betas))
    return float(np.quantile(resid, tau, method=qdef))


def _break_ties(resid, alphas, tau):
    """Step an intercept one ulp down when residuals tied at it push coverage past tau + 1/T.

    Candidate slopes through two data points (the QR vertex sits at the
    grid centre) tie residuals exactly; counting the tie as below or above
    the intercept is then a choice, and the one closer to tau is taken.
    """
    T = resid.shape[0]
    above = np.abs((resid <= alphas).sum(axis=0) / T - tau)
    below = np.abs((resid < alphas).sum(axis=0) / T - tau)
    step = (above > 1.0 / T + 1e-12) & (below < above)
    return np.where(step, np.nextafter(alphas, -np.inf), alphas)


def _weighted_indicator(resid, tau):
    """Order-statistic intercepts and indicators averaging exactly tau (see module docstring)."""
    T = resid.shape[0]
    k = max(1, int(np.ceil(tau * T - 1e-9)))
    theta = tau * T - (k - 1)
    order = np.argsort(resid, axis=0, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(T)[:, None], axis=0)
    ind = (ranks < k - 1) + theta * (ranks == k - 1)
    alphas = np.take_along_axis(resid, order[k - 1 : k], axis=0)[0]
    return alphas, ind


def _evaluate(y, terms, W, tau, B, config: GqrConfig):
    """Objective, moments and intercepts for each row of the candidate matrix B.

    Candidates sharing an indicator vector share one binary fit, so points
    on the same plateau of the piecewise-constant objective tie exactly.
    """
    T = y.shape[0]
    resid = y[:, None] - terms @ B.T
    if config.quantile_definition == "inverted_cdf":
        alphas, ind = _weighted_indicator(resid, tau)
        alphas = _break_ties(resid, alphas, tau)
    else:
        alphas = np.quantile(resid, tau, axis=0, method=config.quantile_definition)
        alphas = _break_ties(resid, alphas, tau)
        ind = (resid <= alphas).astype(float)
    patterns, which = np.unique(ind.T, axis=0, return_inverse=True)
    patterns = patterns.T
    probs = fit_binary_many(W, patterns, config.link, ridge=config.ridge)
    g = (terms.T @ (patterns - probs) / T)[:, np.reshape(which, -1)]
    A = np.eye(terms.shape[1]) if config.weighting is None else np.asarray(config.weighting, dtype=float)
    obj = np.einsum("jg,jk,kg->g", g, A, g)
    return obj, g.T, alphas


def gqr_objective(frame: ProjectionFrame, tau: float, betas, spec=SqfSpec.LINEAR, config: GqrConfig | None = None):
    """Return ``(g' A g, g)`` at one candidate slope vector."""
    config = config or GqrConfig()
    spec = SqfSpec(spec)
    B = np.atleast_1d(np.asarray(betas, dtype=float))[None, :]
    if B.shape[1] != spec.degree:
        raise ValueError(f"{spec.value} spec needs {spec.degree} slope(s)")
    obj, g, _ = _evaluate(frame.outcome, frame.treatment_terms(spec.degree), frame.controls, tau, B, config)
    return float(obj[0]), g[0]


def _scale_proxy(y, terms, center):
    T = y.shape[0]
    iqr = np.subtract(*np.quantile(y, [0.75, 0.25]))
    out = np.empty(terms.shape[1])
    for j in range(terms.shape[1]):
        sd = terms[:, j].std(ddof=1)
        s = iqr / (np.sqrt(T) * sd) if sd > 0 else np.nan
        out[j] = s if np.isfinite(s) and s > 0 else abs(center[j]) + 1.0
    return out


def _grid(center, halfwidth, n):
    axes = [c + np.linspace(-1.0, 1.0, n) * hw for c, hw in zip(center, halfwidth)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def fit_gqr(frame: ProjectionFrame, tau: float, spec=SqfSpec.LINEAR, config: GqrConfig | None = None) -> GqrFit:
    """Grid-search GQR estimate of the structural quantile function at ``tau``.

    The first grid is centred at the quantile-regression-with-controls
    slope and spans ``grid_halfwidth_factor`` times a rough standard error
    on either side. While a minimiser lies on the grid edge (and the
    objective is not flat) the grid is re-centred on that edge point, up
    to ``max_expansions`` times; a fit still on the edge afterwards is
    flagged and warned about. Each refinement then re-centres on the
    incumbent and shrinks the half-width by ``shrink``. Ties go to the
    candidate closest to the first grid's centre, measured in units of the
    initial half-width.
    """
    config = config or GqrConfig()
    spec = SqfSpec(spec)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    y = frame.outcome
    T = frame.n_obs
    terms = frame.treatment_terms(spec.degree)
    W = frame.controls
    p = spec.degree

    if min(tau, 1.0 - tau) * T < config.min_tail:
        warnings.warn(
            f"tau={tau} leaves fewer than {config.min_tail} observations in a tail (T={T})",
            ThinTailWarning,
            stacklevel=2,
        )

    center0 = fit_qr(np.column_stack([terms, W]), y, tau).coefficients[:p]
    hw0 = config.grid_halfwidth_factor * _scale_proxy(y, terms, center0)
    n = config.grid_points if p == 1 else config.quadratic_grid_points

    # moments near zero come from cancellation, so ties are judged on the scale of g
    gtol = 1e-11 * max(float(np.abs(terms).mean()), 1e-300)

    def tied(a, m):
        return a <= m + 1e-12 * m + 2.0 * np.sqrt(m) * gtol + gtol**2

    def pick(B, obj):
        ties = np.flatnonzero(tied(obj, obj.min()))
        dist = np.linalg.norm((B[ties] - center0) / hw0, axis=1)
        return int(ties[np.argmin(dist)]), ties

    def edge_minimiser(ties, obj):
        """A tied minimiser on the grid edge, unless the objective is flat."""
        if obj.max() - obj.min() <= 1e-12 * max(obj.max(), 1e-300):
            return None
        for t in ties:
            if any(k in (0, n - 1) for k in np.unravel_index(t, (n,) * p)):
                return int(t)
        return None

    # Stage 0: slide the grid while a minimiser sits on its edge.
    center = center0.copy()
    trace = []
    for expansion in range(config.max_expansions + 1):
        B = _grid(center, hw0, n)
        obj, g, alphas = _evaluate(y, terms, W, tau, B, config)
        trace.append((B, obj))
        i, ties = pick(B, obj)
        edge = edge_minimiser(ties, obj)
        if edge is None or expansion == config.max_expansions:
            break
        center = B[edge].copy()
    on_boundary = edge is not None
    best = (B[i].copy(), float(obj[i]), g[i].copy(), float(alphas[i]))
    stage_obj = [best[1]]

    hw = hw0.copy()
    for _ in range(config.refinements):
        hw = hw / config.shrink
        B = _grid(best[0], hw, n)
        obj, g, alphas = _evaluate(y, terms, W, tau, B, config)
        trace.append((B, obj))
        i, _ = pick(B, obj)
        # a tie with the incumbent (same plateau, rounding aside) moves towards the centre
        if tied(obj[i], best[1]):
            best = (B[i].copy(), float(obj[i]), g[i].copy(), float(alphas[i]))
        stage_obj.append(best[1])

    if on_boundary:
        warnings.warn(
            f"GQR incumbent on the grid boundary (tau={tau}, h={frame.horizon}); widen the grid",
            GridBoundaryWarning,
            stacklevel=2,
        )
    betas, objective, moment, alpha = best
    resid = y - terms @ betas
    coverage = float(np.mean(resid <= alpha))
    if abs(coverage - tau) > 1.0 / T + 1e-12:
        # only possible when residuals are tied at the intercept
        warnings.warn(
            f"coverage {coverage:.6f} differs from tau={tau} by more than 1/T (T={T})",
            ScalingConditionWarning,
            stacklevel=2,
        )
    return GqrFit(
        tau=tau,
        horizon=frame.horizon,
        alpha=alpha,
        betas=betas,
        objective=objective,
        grid_resolution=float(np.max(2.0 * hw / (n - 1))),
        coverage=coverage,
        moment=moment,
        n_obs=T,
        center=center0,
        on_boundary=on_boundary,
        stage_objectives=tuple(stage_obj),
        trace=trace,
    )
