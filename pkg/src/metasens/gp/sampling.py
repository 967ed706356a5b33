"""Posterior realizations by kriging conditioning, and their updates.

A realization of the conditioned process on a point set P is obtained from
an unconditioned zero-mean path Z~ drawn jointly on P and the design X:

    Z_n(P) = m_n(P) - W(P) Z~(X) + Z~(P),

where W(P) holds the universal-kriging weights, so that ``W(P) Y = m_n(P)``.
Unconditioned paths come from a dense Cholesky factor for small point sets.
For large ones the default is a low-rank posterior sampler: the posterior
is drawn exactly on a random subset U of the points and carried to the
rest through ``k_n(P, U) k_n(U, U)^+``.  This drops only the part of the
posterior variance that U cannot explain (reported by
:func:`lowrank_residual`).  Random Fourier features are also available,
but they lose accuracy badly when the posterior variance is a tiny fraction
of the prior variance.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ArgumentError, DegenerateModelError
from ..rng import as_generator
from .model import GpModel, cholesky_with_nugget

MAX_DENSE = 2000
N_FEATURES = 200
DEGENERATE_UPDATE_TOL = 1e-12
TIE_TOL = 1e-10
BLOCK = 20_000  # rows per Fourier feature block
N_INDUCING = 1500
EIG_TOL = 1e-10


def _dense_paths(model: GpModel, P, count, rng):
    # repeated points (e.g. design points among P) would make the joint
    # correlation singular, so the path is drawn once per distinct point
    allpts, inverse = np.unique(np.vstack([P, model.X]), axis=0, return_inverse=True)
    L, _ = cholesky_with_nugget(model.kernel.correlation(allpts, allpts))
    xi = rng.standard_normal((allpts.shape[0], count))
    Z = (math.sqrt(model.sigma2) * (L @ xi))[inverse.ravel()]
    return Z[: P.shape[0]].T, Z[P.shape[0]:].T


def _fourier_paths(model: GpModel, P, count, rng, n_features):
    allpts = np.vstack([P, model.X])
    d = allpts.shape[1]
    scale = math.sqrt(model.sigma2 / n_features)
    out = np.empty((count, allpts.shape[0]))
    for j in range(count):
        omega = model.kernel.spectral_sample(d, n_features, rng)
        a = rng.standard_normal(n_features)
        b = rng.standard_normal(n_features)
        for s in range(0, allpts.shape[0], BLOCK):
            phase = allpts[s: s + BLOCK] @ omega.T
            out[j, s: s + BLOCK] = scale * (np.cos(phase) @ a + np.sin(phase) @ b)
    return out[:, : P.shape[0]], out[:, P.shape[0]:]


def unconditioned_paths(model: GpModel, points, count, seed=0, method="auto", n_features=N_FEATURES):
    """Zero-mean prior draws at ``points`` and at the design, shapes (q, m) and (q, n)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    rng = as_generator(seed)
    if method == "auto":
        method = "dense" if P.shape[0] + model.n <= MAX_DENSE else "fourier"
    if method == "dense":
        zp, zx = _dense_paths(model, P, count, rng)
    elif method == "fourier":
        zp, zx = _fourier_paths(model, P, count, rng, n_features)
    else:
        raise ArgumentError(f"unknown sampling method {method!r}")
    if model.noise_var is not None:
        zx = zx + rng.standard_normal(zx.shape) * np.sqrt(model.noise_var)
    return zp, zx


def _inducing(model: GpModel, P, rng, n_inducing):
    m = P.shape[0]
    idx = np.sort(rng.choice(m, size=min(n_inducing, m), replace=False))
    U = P[idx]
    lam, V = np.linalg.eigh(model.predict_cov(U))
    keep = lam > EIG_TOL * max(lam.max(), 1e-300)
    return U, lam[keep], V[:, keep]


def _lowrank_paths(model: GpModel, P, count, rng, n_inducing):
    U, lam, V = _inducing(model, P, rng, n_inducing)
    xi = rng.standard_normal((lam.size, count))
    coef = V @ (xi / np.sqrt(lam)[:, None])          # k_n(U, U)^+ eps(U)
    out = np.empty((count, P.shape[0]))
    for s in range(0, P.shape[0], BLOCK):
        block = P[s: s + BLOCK]
        out[:, s: s + BLOCK] = (model.predict_cov(block, U) @ coef).T + model.mean(block)[None, :]
    return out


def lowrank_residual(model: GpModel, points, seed=0, n_inducing=N_INDUCING) -> float:
    """Fraction of the total posterior variance at ``points`` lost by the low-rank sampler."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    U, lam, V = _inducing(model, P, as_generator(seed), n_inducing)
    _, var = model.predict(P)
    total = float(np.sum(var))
    if total <= 0:
        return 0.0
    B = model.predict_cov(P, U) @ (V / np.sqrt(lam))
    return max(0.0, 1.0 - float(np.sum(B * B)) / total)


def sample_posterior(
    model: GpModel, points, count: int, seed=0, method="auto", n_features=N_FEATURES, n_inducing=N_INDUCING
):
    """``count`` posterior realizations of the process at ``points``; shape (count, m).

    ``method`` is ``"dense"`` (exact), ``"lowrank"``, ``"fourier"`` or
    ``"auto"`` (dense up to ``MAX_DENSE`` points including the design,
    low-rank beyond).
    """
    if count < 1:
        raise ArgumentError("need at least one realization")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if method == "auto":
        method = "dense" if P.shape[0] + model.n <= MAX_DENSE else "lowrank"
    if method == "lowrank":
        return _lowrank_paths(model, P, count, as_generator(seed), n_inducing)
    zp, zx = unconditioned_paths(model, P, count, seed, method, n_features)
    W = model.kriging_weights(P)
    return model.mean(P)[None, :] + zp - zx @ W.T


def update_realization(model: GpModel, points, values, new_point, true_value):
    """Condition realizations on one more observation G(x_new) = true_value.

    ``values`` holds realizations at ``points`` (shape (m,) or (q, m)); one
    row of ``points`` must be ``new_point``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    x_new = np.asarray(new_point, dtype=float).ravel()
    hits = np.flatnonzero(np.all(np.isclose(P, x_new, rtol=0, atol=1e-12), axis=1))
    if hits.size == 0:
        raise ArgumentError("the new point must be one of the realization points")
    j = int(hits[0])
    k_row = model.predict_cov(x_new[None, :], P)[0]
    k_nn = k_row[j]
    if k_nn < DEGENERATE_UPDATE_TOL * max(model.sigma2, 1e-300):
        raise DegenerateModelError("posterior variance at the new point is zero; it is already known")
    vals = np.asarray(values, dtype=float)
    innovation = true_value - vals[..., j]
    out = vals + (k_row / k_nn) * innovation[..., None]
    out[..., j] = true_value
    return out


def next_design_point(model: GpModel, candidates) -> int:
    """Index of the candidate with the largest posterior variance (lowest index on ties)."""
    C = np.atleast_2d(np.asarray(candidates, dtype=float))
    if C.shape[0] == 0:
        raise ArgumentError("empty candidate set")
    _, var = model.predict(C)
    var = np.where(var <= TIE_TOL * model.sigma2, 0.0, var)
    return int(np.argmax(var))
