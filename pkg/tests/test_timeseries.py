import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qirlab.timeseries import (
    Panel,
    ProjectionFrame,
    TransformSpec,
    apply_transform,
    build_frame,
    cumulative_log_growth,
    first_difference,
    z_score,
)


Y8 = [10.0, 11.0, 13.0, 12.0, 17.0, 15.0, 16.0, 19.0]
D8 = [100.0, 104.0, 101.0, 103.0, 108.0, 102.0, 107.0, 105.0]
W8 = [1000.0, 1003.0, 1007.0, 1001.0, 1004.0, 1009.0, 1002.0, 1006.0]


def toy_panel(T=5):
    return Panel.from_columns({"y": Y8[:T], "d": D8[:T], "w": W8[:T]}, index=np.arange(200, 200 + T))


# -- Panel ----------------------------------------------------------------------

def test_panel_rejects_duplicates_and_nan():
    with pytest.raises(ValueError, match="duplicate"):
        Panel(("a", "a"), np.zeros((3, 2)), np.arange(3))
    with pytest.raises(ValueError, match="'b' at index 11"):
        Panel(("a", "b"), np.array([[1.0, 2.0], [1.0, np.nan]]), np.array([10, 11]))


def test_panel_requires_increasing_index():
    with pytest.raises(ValueError, match="strictly increasing"):
        Panel(("a",), np.zeros((3, 1)), np.array([0, 2, 2]))


def test_panel_is_read_only():
    p = toy_panel()
    with pytest.raises(ValueError):
        p.data[0, 0] = 5.0


def test_panel_columns_must_match_length():
    with pytest.raises(ValueError, match="unequal"):
        Panel.from_columns({"a": [1, 2], "b": [1, 2, 3]})


# -- transforms -----------------------------------------------------------------

def test_cumulative_log_growth_hand_value():
    out = cumulative_log_growth([100, 101, 102.01], 1)
    assert out[1] == pytest.approx(100 * np.log(1.0201), abs=1e-12)
    assert out[1] == pytest.approx(1.99007, abs=1e-5)
    assert np.isnan(out[0]) and np.isnan(out[2])


@pytest.mark.parametrize("h", [0, 1, 3])
def test_cumulative_log_growth_constant_levels(h):
    out = cumulative_log_growth(np.full(8, 42.0), h)
    assert np.allclose(out[np.isfinite(out)], 0.0)


def test_cumulative_log_growth_h0_is_one_period_growth():
    x = np.array([1.0, 2.0, 3.0, 5.0])
    out = cumulative_log_growth(x, 0)
    assert np.allclose(out[1:], 100 * np.diff(np.log(x)))


def test_cumulative_log_growth_names_bad_index():
    with pytest.raises(ValueError, match="index 2"):
        cumulative_log_growth([1.0, 2.0, 0.0, 3.0], 0)


def test_z_score_hand_value():
    assert np.allclose(z_score([1, 2, 3]), [-1, 0, 1], atol=1e-15)


def test_z_score_constant_errors():
    with pytest.raises(ValueError, match="degenerate series"):
        z_score([3.0, 3.0, 3.0])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(3, 40), elements=st.floats(-1e3, 1e3)))
def test_z_score_properties(x):
    if np.ptp(x) < 1e-6 * max(1.0, np.abs(x).max()):
        return
    z = z_score(x)
    assert abs(z.mean()) < 1e-12
    assert abs(z.std(ddof=1) - 1) < 1e-12
    assert np.allclose(z_score(z), z, atol=1e-12)


def test_first_difference_aligned():
    out = first_difference([1.0, 4.0, 9.0])
    assert np.isnan(out[0]) and list(out[1:]) == [3.0, 5.0]


def test_transform_spec_validates_and_scales():
    with pytest.raises(ValueError):
        TransformSpec("log")
    assert np.allclose(apply_transform([1.0, 2.0], TransformSpec("identity", 3.0)), [3.0, 6.0])


# -- build_frame ----------------------------------------------------------------

def test_frame_length_counting():
    p = Panel.from_columns({"y": np.random.default_rng(0).normal(size=10), "d": np.random.default_rng(1).normal(size=10)})
    f = build_frame(p, "y", "d", (), (("d",), 2), h=2)
    assert f.n_obs == 10 - 2 - 2


def test_frame_empty_controls_is_intercept():
    f = build_frame(toy_panel(), "y", "d", h=1)
    assert f.controls.shape == (4, 1)
    assert np.all(f.controls == 1.0)
    assert f.control_names == ("const",)


def test_frame_hand_alignment():
    p = toy_panel(8)  # index 200..207
    f = build_frame(p, "y", "d", ("w",), (("y", "d"), 1), h=1)
    # rows t = 1..6; check t = 2
    assert f.n_obs == 6
    r = 1
    assert f.times[r] == 202
    assert f.outcome[r] == 12.0  # y at t+1
    assert f.treatment[r] == 101.0
    assert list(f.controls[r]) == [1.0, 1007.0, 11.0, 104.0]
    assert f.control_names == ("const", "w", "y_lag1", "d_lag1")
    assert np.all(f.outcome_times - f.times == 1)


def test_frame_insufficient_observations():
    with pytest.raises(ValueError, match="insufficient observations"):
        build_frame(toy_panel(5), "y", "d", ("w",), (("y", "d"), 1), h=2)


def test_frame_rank_deficiency():
    rng = np.random.default_rng(0)
    a = rng.normal(size=20)
    p = Panel.from_columns({"y": rng.normal(size=20), "d": rng.normal(size=20), "a": a, "b": 2 * a})
    with pytest.raises(ValueError, match="rank deficient"):
        build_frame(p, "y", "d", ("a", "b"))


def test_frame_cumulative_outcomes():
    y = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    p = Panel.from_columns({"y": y, "d": np.arange(6.0)})
    f = build_frame(p, "y", "d", h=2, outcome_kind="cumulative-sum")
    assert list(f.outcome) == [7.0, 14.0, 28.0, 56.0]
    g = build_frame(p, "y", "d", h=1, outcome_kind="cumulative-log-growth")
    assert g.times[0] == 1
    assert g.outcome[0] == pytest.approx(100 * np.log(4.0 / 1.0))


def test_frame_column_order_independence():
    rng = np.random.default_rng(3)
    cols = {n: rng.normal(size=30) for n in ("y", "d", "a", "b")}
    p = Panel.from_columns(cols)
    f1 = build_frame(p, "y", "d", ("a", "b"), (("a", "b"), 2), h=1)
    f2 = build_frame(p, "y", "d", ("b", "a"), (("b", "a"), 2), h=1)
    perm = [f2.control_names.index(n) for n in f1.control_names]
    assert np.array_equal(f1.controls, f2.controls[:, perm])
    assert np.array_equal(f1.outcome, f2.outcome)


@settings(max_examples=30, deadline=None)
@given(st.integers(12, 40), st.integers(0, 4), st.integers(0, 3))
def test_frame_alignment_property(T, h, maxlag):
    assume(T - h - maxlag >= 1 + 2 * maxlag + 2)
    rng = np.random.default_rng(T * 100 + h * 10 + maxlag)
    p = Panel.from_columns({"y": rng.normal(size=T), "d": rng.normal(size=T)}, index=np.arange(T) * 3 + 7)
    f = build_frame(p, "y", "d", (), (("y", "d"), maxlag), h)
    assert f.n_obs == T - h - maxlag
    pos = (f.times - 7) // 3
    assert np.array_equal(f.outcome, p.column("y")[pos + h])
    assert np.array_equal(f.treatment, p.column("d")[pos])


def test_take_copies_rows():
    f = build_frame(toy_panel(8), "y", "d", h=1)
    g = f.take(np.array([0, 0, 3]))
    assert isinstance(g, ProjectionFrame)
    assert list(g.outcome) == [f.outcome[0], f.outcome[0], f.outcome[3]]
