import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfpforecast.errors import InsufficientHistory, SeriesTooShort, SingularDesign
from lfpforecast.linear import (
    ARModel,
    VARModel,
    argmin_order,
    fit_ar,
    fit_ar_windows,
    fit_var,
    information_criteria,
    lag_design,
    model_from_json,
    model_to_json,
    ols,
    predict_ar,
    predict_ar_batch,
    predict_var,
    predict_var_batch,
    select_order,
)

from .oracles import simulate_ar, simulate_var

AR2 = (0.5, -0.3)
VAR1 = np.array([[0.5, 0.2], [0.1, 0.4]])
AR3 = (0.5, -0.4, 0.3)


def test_constant_series_is_singular():
    with pytest.raises(SingularDesign):
        fit_ar(np.ones(100), 2)


def test_too_short():
    with pytest.raises(SeriesTooShort):
        fit_ar(np.arange(5.0), 2)
    with pytest.raises(SeriesTooShort):
        fit_var([np.arange(20.0), np.arange(20.0)], 6)


def test_ar2_recovery_mean_over_seeds():
    est = np.array([fit_ar(simulate_ar(AR2, 5000, seed=s), 2).coeffs for s in range(20)])
    assert np.all(np.abs(est.mean(axis=0) - AR2) < 0.05)
    assert np.all(np.abs(est - AR2) < 0.05)


def test_white_noise_ar3_slopes_near_zero():
    m = fit_ar(np.random.default_rng(0).standard_normal(5000), 3)
    assert np.all(np.abs(m.coeffs) < 0.05)
    assert m.noise_variance == pytest.approx(1.0, abs=0.1)


def test_predict_ar_trivial_cases():
    const = ARModel(3, 2.5, np.zeros(3), 0.0)
    assert predict_ar(const, [9.0, -4.0, 1.0]) == 2.5
    walk = ARModel(1, 0.0, [1.0], 0.0)
    assert predict_ar(walk, [3.0, 7.0, -1.5]) == -1.5
    with pytest.raises(InsufficientHistory):
        predict_ar(const, [1.0])


def test_noiseless_ar2_reproduced():
    # short enough that the transient has not decayed into a collinear design
    x = simulate_ar(AR2, 60, seed=1, noise=0.0, init=(1.0, -0.5), intercept=0.2)
    m = fit_ar(x, 2)
    preds = [predict_ar(m, x[t - 2 : t]) for t in range(2, 60)]
    np.testing.assert_allclose(preds, x[2:60], atol=1e-8)


def test_ols_residuals_orthogonal_and_in_sample_consistency():
    x = simulate_ar(AR3, 2000, seed=3)
    design, target = lag_design(x, 3)
    beta, resid = ols(design, target[:, 0])
    scale = np.linalg.norm(design, axis=0) * np.linalg.norm(resid)
    assert np.all(np.abs(design.T @ resid) / scale < 1e-6)
    m = fit_ar(x, 3)
    windows = np.lib.stride_tricks.sliding_window_view(x, 3)[:-1]
    np.testing.assert_allclose(predict_ar_batch(m, windows), design @ beta, atol=1e-10)


def test_ols_matches_stable_solver_oracle():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(200, 5))
    y = rng.normal(size=200)
    beta, _ = ols(x, y)
    ref, *_ = np.linalg.lstsq(x, y, rcond=None)
    np.testing.assert_allclose(beta, ref, atol=1e-8)


def test_var1_recovery():
    est = np.array([fit_var(simulate_var([VAR1], 5000, seed=s), 1).coef_matrices[0] for s in range(20)])
    assert np.all(np.abs(est.mean(axis=0) - VAR1) < 0.05)


def test_independent_channels_off_diagonal():
    a = simulate_ar((0.6,), 5000, seed=10)
    b = simulate_ar((-0.4,), 5000, seed=11)
    B = fit_var([a, b], 1).coef_matrices[0]
    assert abs(B[0, 1]) < 0.05 and abs(B[1, 0]) < 0.05


def test_duplicated_channel_singular():
    x = simulate_ar(AR2, 500, seed=2)
    with pytest.raises(SingularDesign):
        fit_var([x, x], 2)


def test_predict_var_trivial_cases():
    zero = VARModel(2, [1.0, -2.0], np.zeros((2, 2, 2)), np.eye(2))
    np.testing.assert_array_equal(predict_var(zero, np.ones((2, 4))), [1.0, -2.0])
    ident = VARModel(1, [0.0, 0.0], [np.eye(2)], np.eye(2))
    np.testing.assert_array_equal(predict_var(ident, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]), [3.0, 6.0])
    with pytest.raises(InsufficientHistory):
        predict_var(zero, np.ones((2, 1)))


def test_noiseless_var2_reproduced():
    mats = [np.array([[0.5, 0.1], [-0.2, 0.3]]), np.array([[-0.3, 0.05], [0.1, -0.2]])]
    d = simulate_var(mats, 80, seed=5, noise=0.0, intercepts=(0.1, -0.2), init=np.array([[1.0, 0.3], [-0.5, 0.8]]))
    m = fit_var(d, 2)
    preds = np.array([predict_var(m, d[:, t - 2 : t]) for t in range(2, 80)])
    np.testing.assert_allclose(preds, d[:, 2:].T, atol=1e-8)
    np.testing.assert_allclose(predict_var_batch(m, np.stack([d[:, t - 2 : t] for t in range(2, 80)])), preds, atol=1e-10)


def test_var_with_zero_cross_terms_equals_two_ars():
    a = ARModel(2, 0.3, [0.4, -0.2], 1.0)
    b = ARModel(2, -0.1, [0.1, 0.25], 1.0)
    mats = np.zeros((2, 2, 2))
    mats[:, 0, 0] = a.coeffs
    mats[:, 1, 1] = b.coeffs
    var = VARModel(2, [a.intercept, b.intercept], mats, np.eye(2))
    w = np.random.default_rng(6).normal(size=(50, 2, 12))
    joint = predict_var_batch(var, w)
    np.testing.assert_allclose(joint[:, 0], predict_ar_batch(a, w[:, 0]), atol=1e-10)
    np.testing.assert_allclose(joint[:, 1], predict_ar_batch(b, w[:, 1]), atol=1e-10)


def test_window_fit_matches_series_fit():
    x = simulate_ar(AR2, 600, seed=7)
    windows = np.lib.stride_tricks.sliding_window_view(x, 12)[:-1]
    targets = x[12:]
    m_w = fit_ar_windows(windows, targets, 2)
    design, target = lag_design(x, 2, start=12)
    beta, _ = ols(design, target[:, 0])
    np.testing.assert_allclose(m_w.coeffs, beta[1:], atol=1e-12)


@pytest.mark.parametrize("criterion", ["aic", "bic"])
def test_select_order_ar3(criterion):
    hits = sum(select_order(simulate_ar(AR3, 5000, seed=s), 6, criterion) == 3 for s in range(20))
    assert hits >= 16


def test_select_order_white_noise_bic():
    hits = sum(select_order(np.random.default_rng(s).standard_normal(5000), 6, "bic") == 1 for s in range(20))
    assert hits >= 16


def test_tie_break_toward_smaller_order():
    assert argmin_order({1: 5.0, 2: 3.0, 3: 3.0, 4: 4.0}) == 2
    assert argmin_order({3: 1.0, 1: 1.0}) == 1


def test_likelihood_term_monotone_in_order():
    x = simulate_ar(AR3, 3000, seed=8)
    aic = information_criteria(x, 8, "aic")
    loglik = [aic[p] - 2 * (p + 1) for p in range(1, 9)]
    assert all(b <= a + 1e-9 for a, b in zip(loglik, loglik[1:]))


def test_bivariate_criteria_parameter_count():
    d = simulate_var([VAR1], 2000, seed=9)
    aic = information_criteria(d, 3, "aic")
    bic = information_criteria(d, 3, "bic")
    n_eff = 2000 - 3
    for p in (1, 2, 3):
        k = 2 * (2 * p + 1)
        assert bic[p] - aic[p] == pytest.approx(k * np.log(n_eff) - 2 * k)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10_000))
def test_json_round_trip(p, seed):
    rng = np.random.default_rng(seed)
    ar = ARModel(p, float(rng.normal()), rng.normal(size=p), float(rng.uniform()))
    back = model_from_json(model_to_json(ar))
    assert back.order == p and back.intercept == ar.intercept
    np.testing.assert_array_equal(back.coeffs, ar.coeffs)
    var = VARModel(p, rng.normal(size=2), rng.normal(size=(p, 2, 2)), np.eye(2))
    vb = model_from_json(model_to_json(var))
    np.testing.assert_array_equal(vb.coef_matrices, var.coef_matrices)
    np.testing.assert_array_equal(vb.intercepts, var.intercepts)
