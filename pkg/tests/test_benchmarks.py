from __future__ import annotations

import math

import numpy as np
import pytest
import yaml
from scipy.integrate import quad

from metasens import benchmarks
from metasens.benchmarks import (
    default_truss,
    g_sobol,
    g_sobol_indices,
    ishigami,
    ishigami_indices,
    morris,
    reference_indices,
    truss_deflection,
    truss_solve,
)
from metasens.benchmarks.functions import G_SOBOL_A
from metasens.errors import ArgumentError, DomainError, MechanismError
from metasens.sobol import pick_freeze_indices
from oracles import morris_term_by_term, truss_hand_assembled

TRUSS_MEAN = np.array([2.1e11, 2.1e11, 2e-3, 1e-3] + [5e4] * 6)


def test_ishigami_values():
    assert ishigami([0.0, 0.0, 0.0]) == 0.0
    assert ishigami([math.pi / 2, 0.0, 0.0]) == pytest.approx(1.0, abs=1e-15)
    _, first, total = ishigami_indices()
    # the published values are truncated to four decimals
    np.testing.assert_allclose(first, [0.3138, 0.4424, 0.0], atol=2e-4)
    assert total[2] == pytest.approx(0.2437, abs=5e-4)


def test_ishigami_indices_by_quadrature():
    # conditional expectations integrated numerically over the uniform law
    V, first, total = ishigami_indices()
    u = 1 / (2 * math.pi)

    def cond_var(f):
        m = quad(lambda t: f(t) * u, -math.pi, math.pi)[0]
        return quad(lambda t: (f(t) - m) ** 2 * u, -math.pi, math.pi)[0]

    ex4 = quad(lambda t: t**4 * u, -math.pi, math.pi)[0]
    v1 = cond_var(lambda t: math.sin(t) * (1 + 0.1 * ex4))
    v2 = cond_var(lambda t: 7 * math.sin(t) ** 2)
    grid = np.linspace(-math.pi, math.pi, 201)
    X = np.stack(np.meshgrid(grid, grid, grid, indexing="ij"), -1).reshape(-1, 3)
    w1 = np.full(201, 1.0)
    w1[1:-1:2], w1[2:-1:2] = 4.0, 2.0  # Simpson weights
    W = (w1[:, None, None] * w1[None, :, None] * w1[None, None, :]).ravel()
    W /= W.sum()
    y = ishigami(X)
    Vq = float(W @ (y - W @ y) ** 2)
    assert V == pytest.approx(Vq, rel=1e-6)
    np.testing.assert_allclose(first[:2], [v1 / V, v2 / V], rtol=1e-8)


def test_g_sobol_values():
    a = np.array(G_SOBOL_A)
    assert g_sobol(np.full(15, 0.5)) == pytest.approx(np.prod(a / (1 + a)), rel=1e-14)
    _, _, S = g_sobol_indices()
    np.testing.assert_allclose(S[:4], [0.604, 0.268, 0.067, 0.020], atol=5e-4)
    assert g_sobol_indices(np.array([1.0, 1e12]))[2][1] < 1e-20
    with pytest.raises(DomainError):
        g_sobol(np.full(15, 1.2))
    with pytest.raises(ArgumentError):
        g_sobol_indices([-1.0, 2.0])


def test_g_sobol_pick_freeze_agrees():
    case = benchmarks.get("g_sobol")
    rep = pick_freeze_indices(case.evaluator, case.input_model, None, 200_000, 0)
    _, _, S = g_sobol_indices()
    for i in range(15):
        e = rep.get((i,))
        assert abs(e.estimate - S[i]) < 3.5 * e.mc_se


def test_morris_matches_enumeration():
    X = np.random.default_rng(0).random((1500, 20))
    ref = np.array([morris_term_by_term(x) for x in X])
    np.testing.assert_allclose(morris(X), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())
    mid = np.full(20, 0.5)
    assert morris(mid) == pytest.approx(morris_term_by_term(mid), abs=1e-12)


def test_morris_permuting_tail_variables():
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = rng.random(20)
        y = x.copy()
        y[10:] = rng.permutation(y[10:])
        assert morris(y) == pytest.approx(morris_term_by_term(y), abs=1e-10)


def test_morris_domain():
    with pytest.raises(DomainError):
        morris(np.full(20, -0.1))
    with pytest.raises(ArgumentError):
        morris(np.full(19, 0.5))


def test_truss_against_hand_assembly():
    ref, _, _ = truss_hand_assembled(TRUSS_MEAN)
    assert truss_deflection(TRUSS_MEAN) == pytest.approx(ref, rel=1e-10)
    assert ref > 0
    rng = np.random.default_rng(2)
    X = TRUSS_MEAN * rng.uniform(0.7, 1.3, (20, 10))
    refs = [truss_hand_assembled(x)[0] for x in X]
    np.testing.assert_allclose(truss_deflection(X), refs, rtol=1e-10)


def test_truss_equilibrium_and_reactions():
    U, R = truss_solve(TRUSS_MEAN)
    _, u_ref, r_ref = truss_hand_assembled(TRUSS_MEAN)
    np.testing.assert_allclose(U, u_ref, rtol=1e-10, atol=1e-16)
    support = [0, 1, 13]
    free = np.setdiff1d(np.arange(26), support)
    assert np.max(np.abs(R[free])) < 1e-9 * 3e5
    assert R[1] + R[13] == pytest.approx(3e5, rel=1e-9)
    assert abs(R[0]) < 1e-9 * 3e5
    np.testing.assert_allclose(R[support], r_ref[support], rtol=1e-9, atol=1e-9 * 3e5)


def test_truss_linearity_and_scaling():
    base = truss_deflection(TRUSS_MEAN)
    zero = TRUSS_MEAN.copy()
    zero[4:] = 0.0
    assert truss_deflection(zero) == 0.0
    double_p = TRUSS_MEAN.copy()
    double_p[4:] *= 2
    assert truss_deflection(double_p) == pytest.approx(2 * base, rel=1e-12)
    double_ea = TRUSS_MEAN.copy()
    double_ea[:2] *= 2
    assert truss_deflection(double_ea) == pytest.approx(base / 2, rel=1e-12)


def test_truss_spectral_equals_cholesky():
    case = benchmarks.get("truss")
    X = case.input_model.sample(2000, "mc", 3).points
    np.testing.assert_allclose(truss_deflection(X, "spectral"), truss_deflection(X), rtol=1e-11)
    with pytest.raises(ArgumentError):
        truss_deflection(X, "lu")


def test_truss_mirror_symmetry():
    x = TRUSS_MEAN.copy()
    x[4:] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    y = x.copy()
    y[4:] = x[4:][::-1]
    assert truss_deflection(x) == pytest.approx(truss_deflection(y), rel=1e-12)


def test_truss_invalid_inputs():
    bad = TRUSS_MEAN.copy()
    bad[2] = 0.0
    with pytest.raises(ArgumentError):
        truss_deflection(bad)
    with pytest.raises(ArgumentError):
        truss_deflection(TRUSS_MEAN[:9])


def test_truss_mechanism(monkeypatch):
    from metasens.benchmarks import truss as mod

    monkeypatch.setattr(mod, "_K2", np.zeros_like(mod._K2))
    with pytest.raises(MechanismError):
        mod.truss_deflection(TRUSS_MEAN)


def test_truss_spec_dump(tmp_path):
    spec = default_truss()
    assert len(spec.members) == 23
    spec.dump(tmp_path / "truss.yaml")
    data = yaml.safe_load((tmp_path / "truss.yaml").read_text())
    assert len(data["nodes"]) == 13 and len(data["members"]) == 23
    assert data["monitored"]["node"] == 4
    assert [ld["node"] for ld in data["loads"]] == list(range(8, 14))


def test_registry_and_references():
    assert set(benchmarks.names()) == {"ishigami", "g_sobol", "morris", "truss"}
    with pytest.raises(ArgumentError):
        benchmarks.get("borehole")
    for name in benchmarks.names():
        case = benchmarks.get(name)
        ref = reference_indices(case)
        assert sum(e.estimate for e in ref.entries) <= 1.0
    truss = reference_indices("truss")
    names = benchmarks.get("truss").input_model.names
    for nm, v in {"A1": 0.365, "E1": 0.365, "P3": 0.075, "P4": 0.074}.items():
        assert truss.estimate((names.index(nm),)) == v
        assert truss.get((names.index(nm),)).estimator == "published_mc"


def test_recomputed_reference_uses_pick_freeze():
    rep = reference_indices("ishigami", recompute=20_000, seed=1)
    assert all(e.estimator == "pick_freeze_first" for e in rep.entries)
    assert rep.estimate((1,)) == pytest.approx(0.4424, abs=0.05)
