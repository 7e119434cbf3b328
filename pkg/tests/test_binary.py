import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qirlab.binary import BinaryFitError, LinkKind, fit_binary, fit_binary_many, penalty_mask
from oracles import two_cell_logit


def test_intercept_only_recovers_share():
    ind = np.zeros(100)
    ind[:30] = 1
    fit = fit_binary(np.ones((100, 1)), ind)
    assert fit.converged
    assert np.allclose(fit.fitted_probabilities, 0.3, atol=1e-6)


@pytest.mark.parametrize("link", list(LinkKind))
def test_separable_data_bounded(link):
    x = np.linspace(-1, 1, 40)
    W = np.column_stack([np.ones(40), x])
    ind = (x > 0).astype(float)
    fit = fit_binary(W, ind, link)
    assert np.all(np.isfinite(fit.coefficients))
    p = fit.fitted_probabilities
    assert np.all((p > 0) & (p < 1))


def test_two_cell_logit_closed_form():
    x = np.array([0] * 10 + [1] * 10)
    ind = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0] + [1, 1, 1, 1, 1, 1, 1, 0, 0, 0], dtype=float)
    W = np.column_stack([np.ones(20), x])
    fit = fit_binary(W, ind, ridge=0.0)
    assert np.allclose(fit.coefficients, two_cell_logit(x, ind), atol=1e-6)


def test_two_cell_probit_closed_form():
    from scipy.stats import norm

    x = np.array([0] * 8 + [1] * 12)
    ind = np.array([1, 1, 0, 0, 0, 0, 0, 0] + [1] * 9 + [0] * 3, dtype=float)
    fit = fit_binary(np.column_stack([np.ones(20), x]), ind, "probit", ridge=0.0)
    a = norm.ppf(2 / 8)
    assert fit.coefficients[0] == pytest.approx(a, abs=1e-6)
    assert fit.coefficients[1] == pytest.approx(norm.ppf(9 / 12) - a, abs=1e-6)


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_degenerate_indicator(value):
    T = 25
    W = np.column_stack([np.ones(T), np.arange(T)])
    fit = fit_binary(W, np.full(T, value))
    assert fit.converged
    expect = T / (T + 1) if value else 1 / (T + 1)
    assert np.allclose(fit.fitted_probabilities, expect)


def test_requires_intercept():
    with pytest.raises(ValueError):
        penalty_mask(np.random.default_rng(0).normal(size=(10, 2)))


def test_failure_raises_after_escalation():
    rng = np.random.default_rng(0)
    W = np.column_stack([np.ones(30), rng.normal(size=30)])
    ind = (rng.random(30) < 0.5).astype(float)
    with pytest.raises(BinaryFitError, match="binary fit failed"):
        fit_binary(W, ind, max_iter=0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_mean_preservation(seed):
    rng = np.random.default_rng(seed)
    W = np.column_stack([np.ones(80), rng.normal(size=(80, 2))])
    ind = (rng.random(80) < 1 / (1 + np.exp(-W @ [0.2, 1.0, -0.5]))).astype(float)
    if ind.min() == ind.max():
        return
    fit = fit_binary(W, ind, ridge=0.0)
    assert abs(fit.fitted_probabilities.mean() - ind.mean()) < 1e-4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 5.0), st.floats(-3, 3))
def test_affine_recoding_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=60)
    ind = (rng.random(60) < 1 / (1 + np.exp(-x))).astype(float)
    if ind.min() == ind.max():
        return
    p1 = fit_binary(np.column_stack([np.ones(60), x]), ind, ridge=0.0).fitted_probabilities
    p2 = fit_binary(np.column_stack([np.ones(60), scale * x + shift]), ind, ridge=0.0).fitted_probabilities
    assert np.allclose(p1, p2, atol=1e-6)
    p3 = fit_binary(np.column_stack([np.ones(60), scale * x + shift]), ind).fitted_probabilities
    assert np.allclose(p1, p3, atol=1e-4)


def test_batched_matches_single():
    rng = np.random.default_rng(4)
    W = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    I = (rng.random((50, 6)) < 0.4).astype(float)
    I[:, 0] = 0.0
    P = fit_binary_many(W, I)
    for g in range(6):
        assert np.allclose(P[:, g], fit_binary(W, I[:, g]).fitted_probabilities, atol=1e-8)
