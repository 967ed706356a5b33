"""Analytic test functions: Ishigami, G-Sobol and Morris.

All evaluators are vectorized: they accept a single point or an ``(n, d)``
array and return a float or an ``(n,)`` array.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ArgumentError, DomainError

G_SOBOL_A = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 500.0) + (1000.0,) * 7


def _points(x, d=None):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if d is not None and X.shape[1] != d:
        raise ArgumentError(f"expected {d} inputs, got {X.shape[1]}")
    return X, single


def _out(y, single):
    return float(y[0]) if single else y


def _check_unit(X):
    if np.any(~np.isfinite(X)) or np.any((X < 0.0) | (X > 1.0)):
        raise DomainError("inputs must lie in the unit hypercube")


# -- Ishigami -------------------------------------------------------------

def ishigami(x, a=7.0, b=0.1):
    X, single = _points(x, 3)
    s1 = np.sin(X[:, 0])
    return _out(s1 + a * np.sin(X[:, 1]) ** 2 + b * X[:, 2] ** 4 * s1, single)


def ishigami_indices(a=7.0, b=0.1):
    """Analytic variance, first-order and total indices of the Ishigami function."""
    pi4 = math.pi**4
    v1 = 0.5 * (1 + b * pi4 / 5) ** 2
    v2 = a * a / 8
    v13 = b * b * pi4 * pi4 * (1 / 18 - 1 / 50)
    V = v1 + v2 + v13
    first = np.array([v1, v2, 0.0]) / V
    total = np.array([v1 + v13, v2, v13]) / V
    return V, first, total


# -- G-Sobol ----------------------------------------------------------------

def g_sobol(x, a=G_SOBOL_A):
    a = np.asarray(a, dtype=float)
    X, single = _points(x, a.size)
    _check_unit(X)
    return _out(np.prod((np.abs(4 * X - 2) + a) / (1 + a), axis=1), single)


def g_sobol_indices(a=G_SOBOL_A):
    """Partial variances V_i, total variance V and first-order indices S_i."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ArgumentError("G-Sobol coefficients must be non-negative")
    Vi = 1.0 / (3.0 * (1.0 + a) ** 2)
    V = float(np.prod(1.0 + Vi) - 1.0)
    return Vi, V, Vi / V


# -- Morris -----------------------------------------------------------------

MORRIS_SHIFTED = (2, 4, 6)  # 0-based positions of x3, x5, x7


def morris_weights(X):
    w = 2.0 * (X - 0.5)
    s = list(MORRIS_SHIFTED)
    w[:, s] = 2.0 * (1.1 * X[:, s] / (X[:, s] + 0.1) - 0.5)
    return w


def morris_coefficients():
    """(beta_i, beta_ij) with 1-based sign conventions; beta_ij is symmetric, zero diagonal."""
    i = np.arange(1, 21)
    b1 = np.where(i <= 10, 20.0, (-1.0) ** i)
    b2 = (-1.0) ** (i[:, None] + i[None, :])
    b2[:6, :6] = -15.0
    np.fill_diagonal(b2, 0.0)
    return b1, b2


def morris(x):
    X, single = _points(x, 20)
    _check_unit(X)
    w = morris_weights(X)
    b1, b2 = morris_coefficients()
    lin = w @ b1
    pair = 0.5 * np.einsum("ni,ij,nj->n", w, b2, w)
    # beta_ijl = -10 on i<j<l<=5: elementary symmetric polynomial of degree 3
    v = w[:, :5]
    p1, p2, p3 = v.sum(1), (v * v).sum(1), (v**3).sum(1)
    e3 = (p1**3 - 3 * p1 * p2 + 2 * p3) / 6.0
    quartic = 5.0 * w[:, 0] * w[:, 1] * w[:, 2] * w[:, 3]
    return _out(lin + pair - 10.0 * e3 + quartic, single)
