from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metasens.benchmarks import ishigami
from metasens.distributions import InputModel, Uniform
from metasens.errors import (
    ArgumentError,
    DegenerateModelError,
    IllConditioningError,
    TrendError,
)
from metasens.gp import (
    GpModel,
    Kernel,
    TrendSpec,
    fit,
    ishigami_trend,
    kernel_eval,
    lowrank_residual,
    next_design_point,
    sample_posterior,
    update_realization,
)

KERNELS = [
    Kernel("squared_exponential", [0.7, 1.3], 2.0, "isotropic"),
    Kernel("matern", [0.7, 1.3], 2.0, "tensorized", 0.5),
    Kernel("matern", [0.7, 1.3], 2.0, "anisotropic", 1.5),
    Kernel("matern", [0.7, 1.3], 2.0, "tensorized", 2.5),
    Kernel("gamma_exponential", [0.7, 1.3], 2.0, "tensorized", gamma=1.5),
]


def _toy(n=12, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 2))
    Y = np.sin(3 * X[:, 0]) + X[:, 1] ** 2
    return X, Y


@pytest.fixture(scope="module")
def toy_model():
    X, Y = _toy()
    return fit(X, Y, TrendSpec.linear(2), Kernel("matern", None, 1.0, "tensorized", 2.5), theta=[0.4, 0.6])


def _dense_oracle(model: GpModel, x):
    # universal kriging through the bordered system [[R, F], [F^T, 0]] [lam; mu] = [r; f]
    X, Y = model.X, model.Y
    R = model.kernel.correlation(X, X)
    F = model.trend(X)
    n, p = F.shape
    K = np.block([[R, F], [F.T, np.zeros((p, p))]])
    rhs = np.vstack([model.kernel.correlation(X, x), model.trend(x).T])
    sol = np.linalg.solve(K, rhs)
    lam, mu = sol[:n], sol[n:]
    mean = lam.T @ Y
    var = model.sigma2 * (1.0 - np.sum(lam * rhs[:n], axis=0) - np.sum(mu * rhs[n:], axis=0))
    return mean, var


@pytest.mark.parametrize("ker", KERNELS, ids=lambda k: f"{k.name}-{k.mode}")
def test_kernel_at_zero_lag_and_psd(ker):
    x = np.array([0.3, -0.2])
    assert kernel_eval(ker, x, x) == pytest.approx(2.0, abs=1e-15)
    P = np.random.default_rng(1).uniform(-2, 2, (40, 2))
    G = ker(P, P)
    np.testing.assert_allclose(G, G.T, atol=1e-15)
    assert np.linalg.eigvalsh(G).min() > -1e-10 * 2.0


def test_kernel_closed_forms():
    se = Kernel("squared_exponential", [0.5], 3.0, "isotropic")
    assert kernel_eval(se, [0.0, 0.0], [0.3, 0.4]) == pytest.approx(3.0 * math.exp(-0.5), rel=1e-14)
    m12 = Kernel("matern", [2.0], 1.5, "isotropic", 0.5)
    assert kernel_eval(m12, [1.0], [3.0]) == pytest.approx(1.5 * math.exp(-1.0), rel=1e-14)


def test_kernel_validation():
    with pytest.raises(ArgumentError):
        Kernel("matern", [1.0, -1.0])
    with pytest.raises(ArgumentError):
        Kernel("matern", nu=2.0)
    with pytest.raises(ArgumentError):
        Kernel("gamma_exponential", gamma=2.5)
    with pytest.raises(ArgumentError):
        kernel_eval(Kernel("matern", [1.0]), [0.0, 1.0], [0.0])


def test_matches_bordered_system_oracle(toy_model):
    assert toy_model.nugget == 0.0
    x = np.random.default_rng(2).uniform(-0.2, 1.2, (100, 2))
    mean, var = toy_model.predict(x)
    m_ref, v_ref = _dense_oracle(toy_model, x)
    np.testing.assert_allclose(mean, m_ref, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(var, v_ref, rtol=1e-8, atol=1e-10 * toy_model.sigma2)


def test_interpolation_at_design(toy_model):
    m, v = toy_model.predict(toy_model.X)
    np.testing.assert_allclose(m, toy_model.Y, rtol=1e-6)
    assert np.all(v <= 1e-6 * toy_model.sigma2)
    c = toy_model.predict_cov(toy_model.X[:3], np.random.default_rng(0).uniform(0, 1, (5, 2)))
    assert np.all(np.abs(c) <= 1e-6 * toy_model.sigma2)


def test_predict_cov_consistency_and_psd(toy_model):
    P = np.random.default_rng(3).uniform(0, 1, (20, 2))
    C = toy_model.predict_cov(P)
    np.testing.assert_allclose(C, C.T, atol=1e-12 * toy_model.sigma2)
    np.testing.assert_allclose(np.diag(C), toy_model.predict(P)[1], rtol=1e-10, atol=1e-14)
    assert np.linalg.eigvalsh(C).min() >= -1e-8 * toy_model.sigma2
    assert toy_model.predict_cov(P[0], P[0]) == pytest.approx(toy_model.predict(P[0])[1], rel=1e-10)


def test_far_field_reverts_to_prior():
    X, Y = _toy()
    model = fit(X, Y, kernel=Kernel("matern", None, 1.0, "tensorized", 2.5), theta=[0.3, 0.5])
    far = np.array([[10 * 0.5 + 1.0, 10 * 0.5 + 1.0]])
    _, v = model.predict(far)
    assert v[0] >= 0.99 * model.sigma2


def test_reml_variance_by_hand():
    X, Y = _toy(n=9, seed=4)
    trend = TrendSpec.linear(2)
    model = fit(X, Y, trend, Kernel("matern", None, 1.0, "tensorized", 1.5), theta=[0.5, 0.8])
    R = model.kernel.correlation(X, X)
    F = trend(X)
    Ri = np.linalg.inv(R)
    beta = np.linalg.solve(F.T @ Ri @ F, F.T @ Ri @ Y)
    e = Y - F @ beta
    np.testing.assert_allclose(model.beta, beta, rtol=1e-10)
    assert model.sigma2 == pytest.approx(e @ Ri @ e / (9 - 3), rel=1e-10)


def test_exact_linear_trend_recovered():
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, (15, 2))
    beta = np.array([1.5, -2.0, 0.25])
    Y = TrendSpec.linear(2)(X) @ beta
    model = fit(X, Y, TrendSpec.linear(2), theta=[0.5, 0.5])
    np.testing.assert_allclose(model.beta, beta, atol=1e-8)
    assert model.sigma2 < 1e-12 * np.var(Y)


def test_shift_and_scale(toy_model):
    X, Y = toy_model.X, toy_model.Y
    base = fit(X, Y, theta=[0.4, 0.6])
    P = np.random.default_rng(6).uniform(0, 1, (30, 2))
    m0, v0 = base.predict(P)
    shifted = fit(X, Y + 7.5, theta=[0.4, 0.6])
    m1, v1 = shifted.predict(P)
    np.testing.assert_allclose(m1, m0 + 7.5, atol=1e-10 * 7.5 + 1e-10)
    np.testing.assert_allclose(v1, v0, rtol=1e-10, atol=1e-12)
    scaled = fit(X, 3.0 * Y, theta=[0.4, 0.6])
    m2, v2 = scaled.predict(P)
    np.testing.assert_allclose(m2, 3.0 * m0, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(v2, 9.0 * v0, rtol=1e-10, atol=1e-12)


def test_sine_holdout():
    X = InputModel([Uniform(0, 1)]).sample(20, "lhs", 0).points
    model = fit(X, np.sin(2 * np.pi * X[:, 0]), kernel=Kernel("matern", None, 1.0, "tensorized", 2.5))
    t = np.linspace(0, 1, 1000)[:, None]
    truth = np.sin(2 * np.pi * t[:, 0])
    q2 = 1 - np.sum((model.mean(t) - truth) ** 2) / np.sum((truth - truth.mean()) ** 2)
    assert q2 > 0.99


def test_ishigami_with_polynomial_trend():
    im = InputModel([Uniform(-math.pi, math.pi)] * 3)
    design = im.sample(100, "lhs", 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        model = fit(design.points, ishigami(design.points), ishigami_trend(), Kernel("matern", None, 1.0, "tensorized", 2.5))
    test = im.sample(10_000, "mc", 1).points
    y = ishigami(test)
    q2 = 1 - np.sum((model.mean(test) - y) ** 2) / np.sum((y - y.mean()) ** 2)
    assert q2 > 0.9


def test_estimation_is_deterministic():
    X, Y = _toy()
    a = fit(X, Y, seed=3, n_starts=3)
    b = fit(X, Y, seed=3, n_starts=3)
    assert np.array_equal(a.theta, b.theta)
    c = fit(X, Y, estimator="loo_cv", seed=3, n_starts=3)
    assert c.metadata["estimator"] == "loo_cv"


def test_design_errors():
    X, Y = _toy()
    with pytest.raises(IllConditioningError):
        fit(np.vstack([X, X[:1]]), np.append(Y, Y[0]), theta=[0.5, 0.5])
    Xc = X.copy()
    Xc[:, 1] = 0.5
    with pytest.raises(TrendError):
        fit(Xc, Y, TrendSpec([[0, 0], [0, 1]]), theta=[0.5, 0.5])
    with pytest.raises(ArgumentError):
        fit(X[:1], Y[:1])


def test_noisy_observations_smooth():
    X, Y = _toy(20, 7)
    Yn = Y + np.random.default_rng(8).normal(0, 0.1, 20)
    model = fit(X, Yn, noise_std=0.1, theta=[0.4, 0.6])
    m, v = model.predict(X)
    assert np.max(np.abs(m - Yn)) > 1e-3
    assert np.all(v > 0)
    # duplicates are allowed with noise
    fit(np.vstack([X, X[:1]]), np.append(Yn, Yn[0] + 0.05), noise_std=0.1, theta=[0.4, 0.6])


def test_serialization_round_trip(tmp_path, toy_model):
    toy_model.save(tmp_path / "gp.json")
    back = GpModel.load(tmp_path / "gp.json")
    P = np.random.default_rng(9).uniform(0, 1, (10, 2))
    np.testing.assert_allclose(back.predict(P)[0], toy_model.predict(P)[0], rtol=1e-14)
    np.testing.assert_allclose(back.predict(P)[1], toy_model.predict(P)[1], rtol=1e-12, atol=1e-15)


def test_realizations_hit_design_values(toy_model):
    Z = sample_posterior(toy_model, toy_model.X, 20, seed=0)
    np.testing.assert_allclose(Z, np.broadcast_to(toy_model.Y, Z.shape), rtol=1e-6, atol=1e-6 * np.abs(toy_model.Y).max())


def test_realization_mean_and_covariance(toy_model):
    P = np.random.default_rng(10).uniform(0, 1, (5, 2))
    m, v = toy_model.predict(P)
    Z = sample_posterior(toy_model, P, 2000, seed=1)
    assert np.all(np.abs(Z.mean(axis=0) - m) <= 4 * np.sqrt(v / 2000))
    Z = sample_posterior(toy_model, P, 5000, seed=2)
    C = toy_model.predict_cov(P)
    assert np.linalg.norm(np.cov(Z.T) - C) < 0.1 * np.linalg.norm(C)


def test_sampling_is_seeded(toy_model):
    P = np.random.default_rng(11).uniform(0, 1, (7, 2))
    assert np.array_equal(sample_posterior(toy_model, P, 3, seed=5), sample_posterior(toy_model, P, 3, seed=5))
    with pytest.raises(ArgumentError):
        sample_posterior(toy_model, P, 0)


def test_lowrank_matches_dense_moments(toy_model):
    P = np.random.default_rng(12).uniform(0, 1, (400, 2))
    assert lowrank_residual(toy_model, P, seed=0, n_inducing=300) < 1e-3
    Z = sample_posterior(toy_model, P, 4000, seed=3, method="lowrank", n_inducing=300)
    m, v = toy_model.predict(P)
    assert np.all(np.abs(Z.mean(axis=0) - m) <= 5 * np.sqrt(v / 4000) + 1e-12)
    ratio = Z.var(axis=0).sum() / v.sum()
    assert 0.9 < ratio < 1.1


def test_update_plug_in_and_zero_innovation(toy_model):
    P = np.random.default_rng(13).uniform(0, 1, (6, 2))
    Z = sample_posterior(toy_model, P, 4, seed=4)
    up = update_realization(toy_model, P, Z, P[2], 1.25)
    assert np.all(up[:, 2] == 1.25)
    same = update_realization(toy_model, P, Z[0], P[2], Z[0, 2])
    np.testing.assert_allclose(same, Z[0], rtol=0, atol=1e-14)


def test_update_degenerate_and_missing_point(toy_model):
    P = np.vstack([toy_model.X[:1], [[0.5, 0.5]]])
    Z = sample_posterior(toy_model, P, 2, seed=0)
    with pytest.raises(DegenerateModelError):
        update_realization(toy_model, P, Z, P[0], 0.0)
    with pytest.raises(ArgumentError):
        update_realization(toy_model, P, Z, [0.9, 0.9], 0.0)


def test_update_agrees_with_refit(toy_model):
    x_new = np.array([0.95, 0.05])
    g_new = float(np.sin(3 * 0.95) + 0.05**2)
    t = np.array([[0.85, 0.15]])
    P = np.vstack([x_new, t])
    q = 5000
    Z = sample_posterior(toy_model, P, q, seed=6)
    up = update_realization(toy_model, P, Z, x_new, g_new)
    refit = GpModel(
        np.vstack([toy_model.X, x_new]), np.append(toy_model.Y, g_new),
        toy_model.trend, toy_model.kernel,
    )
    m, v = refit.predict(t)
    assert abs(up[:, 1].mean() - m[0]) < 4 * math.sqrt(v[0] / q)
    assert up[:, 1].var() == pytest.approx(v[0], rel=0.1)


def test_next_design_point_rules(toy_model):
    far = [[3.0, 3.0]]
    assert next_design_point(toy_model, np.vstack([toy_model.X[:1], far])) == 1
    assert next_design_point(toy_model, toy_model.X[:4]) == 0
    model = fit(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), theta=[0.3])
    grid = np.linspace(0, 1, 101)[:, None]
    assert abs(grid[next_design_point(model, grid), 0] - 0.5) <= 0.01


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-100, 100), s=st.floats(0.1, 10))
def test_mean_affine_equivariance(c, s):
    X, Y = _toy(8, 14)
    P = np.linspace(0, 1, 6)[:, None] * np.ones((1, 2))
    a = fit(X, Y, theta=[0.4, 0.6]).mean(P)
    b = fit(X, s * Y + c, theta=[0.4, 0.6]).mean(P)
    np.testing.assert_allclose(b, s * a + c, rtol=1e-9, atol=1e-9 * (abs(c) + s))
