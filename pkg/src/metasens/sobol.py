"""Sampling-based Sobol' indices.

Pick-freeze estimators work on any evaluator (a vectorized map from an
``(n, d)`` array of physical inputs to ``n`` outputs).  For a Gaussian
process the same pick-freeze sample is pushed through ``m`` posterior
realizations, so the spread of the ``m`` estimates measures the metamodel
uncertainty alone.

First order (symmetrized Sobol' 1993 form), with ``Y_A`` sharing the
coordinates in ``A``::

    mu = mean((Y + Y_A) / 2)
    S_A = (mean(Y * Y_A) - mu^2) / (mean(Y^2) - mu^2)

Total (Jansen), with ``Y_i`` sharing every coordinate except ``i``::

    S_i^tot = mean((Y - Y_i)^2) / 2 / V,   V = mean((Y^2 + Y_i^2) / 2) - mu^2

Standard errors come from the delta method on the sample means.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.stats import qmc

from .distributions import InputModel
from .errors import ArgumentError, DegenerateModelError
from .report import SobolEntry, SobolReport, range_flag
from .rng import as_generator, stream


def _check_subset(subset, d):
    A = tuple(sorted({int(i) for i in np.atleast_1d(subset)}))
    if not A or len(A) >= d or A[0] < 0 or A[-1] >= d:
        raise ArgumentError(f"subset {A} is not a nonempty proper subset of {d} variables")
    return A


def first_order_estimate(y, y_a):
    """Estimate and delta-method standard error of S_A from paired outputs.

    Works along the last axis, so ``y`` may hold several realizations.
    """
    y = np.asarray(y, dtype=float)
    y_a = np.asarray(y_a, dtype=float)
    N = y.shape[-1]
    u1, u2, u3 = y * y_a, 0.5 * (y + y_a), y * y
    mu = u2.mean(axis=-1)
    D = u3.mean(axis=-1) - mu**2
    _check_variance(D)
    S = (u1.mean(axis=-1) - mu**2) / D
    phi = (u1 - S[..., None] * u3 + (2 * mu * (S - 1))[..., None] * u2) / D[..., None]
    se = phi.std(axis=-1, ddof=1) / math.sqrt(N)
    return S, se


def total_estimate(y, y_i):
    """Jansen total-index estimate and its delta-method standard error."""
    y = np.asarray(y, dtype=float)
    y_i = np.asarray(y_i, dtype=float)
    N = y.shape[-1]
    w, q, m = (y - y_i) ** 2, 0.5 * (y * y + y_i * y_i), 0.5 * (y + y_i)
    mu = m.mean(axis=-1)
    V = q.mean(axis=-1) - mu**2
    _check_variance(V)
    T = 0.5 * w.mean(axis=-1) / V
    phi = (0.5 * w - T[..., None] * q + (2 * mu * T)[..., None] * m) / V[..., None]
    se = phi.std(axis=-1, ddof=1) / math.sqrt(N)
    return T, se


def _check_variance(D):
    D = np.asarray(D)
    if np.any(~(D > 0)):
        raise DegenerateModelError("zero empirical output variance; indices are undefined")


SAMPLINGS = ("mc", "sobol")


def _unit_pairs(d, N, seed, sampling):
    if N < 2:
        raise ArgumentError("pick-freeze needs N >= 2")
    if sampling not in SAMPLINGS:
        raise ArgumentError(f"unknown pick-freeze sampling {sampling!r}")
    rng = as_generator(seed)
    if sampling == "sobol":
        with warnings.catch_warnings():
            # balance properties are not needed for N off a power of two
            warnings.simplefilter("ignore", UserWarning)
            W = qmc.Sobol(2 * d, scramble=True, seed=rng).random(N)
        return W[:, :d], W[:, d:]
    return rng.random((N, d)), rng.random((N, d))


def _companion(input_model, U, V, A, total):
    W = U.copy() if total else V.copy()
    cols = list(A)
    W[:, cols] = V[:, cols] if total else U[:, cols]
    return input_model.from_unit(W)


def pick_freeze_points(input_model: InputModel, subsets, N: int, seed=0, total=False, sampling="mc"):
    """Base sample and one frozen companion sample per subset (physical space).

    With ``total=True`` each subset is a single variable ``i`` and its
    companion shares every coordinate except ``i``.  ``sampling="sobol"``
    takes the 2d unit coordinates of each pair from a scrambled Sobol'
    sequence instead of iid uniforms.
    """
    U, V = _unit_pairs(input_model.dim, N, seed, sampling)
    companions = [_companion(input_model, U, V, A, total) for A in subsets]
    return input_model.from_unit(U), companions


def _normalize_subsets(subsets, d, total):
    if subsets is None or isinstance(subsets, str):
        if subsets not in (None, "first_order", "total"):
            raise ArgumentError(f"unknown subset request {subsets!r}")
        return [(i,) for i in range(d)]
    subsets = list(subsets)
    if subsets and np.ndim(subsets[0]) == 0:
        subsets = [(int(i),) for i in subsets]
    out = [_check_subset(A, d) for A in subsets]
    if total and any(len(A) != 1 for A in out):
        raise ArgumentError("total indices are computed for single variables")
    return out


def pick_freeze_indices(
    evaluator, input_model: InputModel, subsets=None, N=10_000, seed=0, total=False, sampling="mc"
):
    """Pick-freeze estimates for several subsets from one base sample.

    ``subsets`` defaults to every single variable.  Raw estimates are kept
    unclamped; values outside [0, 1] carry the ``out_of_range`` flag.
    """
    d = input_model.dim
    subsets = _normalize_subsets(subsets, d, total)
    U, V = _unit_pairs(d, N, seed, sampling)
    y = np.asarray(evaluator(input_model.from_unit(U)), dtype=float).ravel()
    kind, tag = ("total", "pick_freeze_total") if total else ("subset", "pick_freeze_first")
    estimate = total_estimate if total else first_order_estimate
    report = SobolReport(input_model.names)
    for A in subsets:
        # companions are built one at a time to bound memory at large N
        ya = np.asarray(evaluator(_companion(input_model, U, V, A, total)), dtype=float).ravel()
        S, se = estimate(y, ya)
        k = "first" if kind == "subset" and len(A) == 1 else kind
        report.add(SobolEntry(A, k, float(S), tag, N=N, seed=_seed_label(seed), mc_se=float(se), flag=range_flag(S)))
    return report


def pick_freeze_first_order(evaluator, input_model: InputModel, A, N: int, seed=0) -> float:
    A = _check_subset(A, input_model.dim)
    return pick_freeze_indices(evaluator, input_model, [A], N, seed).entries[0].estimate


def pick_freeze_total(evaluator, input_model: InputModel, i: int, N: int, seed=0) -> float:
    if not 0 <= int(i) < input_model.dim:
        raise ArgumentError(f"variable {i} out of range")
    if input_model.dim < 2:
        raise ArgumentError("total indices need at least two variables")
    return pick_freeze_indices(evaluator, input_model, [(int(i),)], N, seed, total=True).entries[0].estimate


def _seed_label(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, (tuple, list)):
        return "-".join(str(s) for s in seed)
    return None


def gp_sobol(
    model, input_model: InputModel, subsets=None, N=10_000, m=100, seed=0, total=False,
    method="auto", sampling="mc",
):
    """Index distribution over ``m`` GP posterior realizations.

    One pick-freeze sample of size ``N`` is drawn and all realizations are
    sampled jointly on its points.  ``sampling="sobol"`` draws it from a
    scrambled Sobol' sequence, which shrinks the pick-freeze error shared
    by all realizations.  Each entry reports the mean over
    realizations as ``estimate``, their standard deviation (ddof=1) as
    ``std`` and the average per-realization MC standard error as ``mc_se``.
    """
    from .gp.sampling import sample_posterior

    if m < 2:
        raise ArgumentError("gp_sobol needs m >= 2 realizations")
    d = input_model.dim
    subsets = _normalize_subsets(subsets, d, total)
    X, comps = pick_freeze_points(input_model, subsets, N, stream(*_as_keys(seed), "pick-freeze"), total, sampling)
    P = np.vstack([X, *comps])
    Z = sample_posterior(model, P, m, seed=stream(*_as_keys(seed), "gp-paths"), method=method)
    y = Z[:, :N]
    estimate = total_estimate if total else first_order_estimate
    report = SobolReport(input_model.names)
    for k, A in enumerate(subsets):
        ya = Z[:, N * (k + 1): N * (k + 2)]
        S, se = estimate(y, ya)
        kind = "total" if total else ("first" if len(A) == 1 else "subset")
        mean = float(np.mean(S))
        # centring on one sample keeps identical realizations at exactly zero spread
        spread = float(np.std(S - S[0], ddof=1))
        report.add(
            SobolEntry(
                A, kind, mean, "gp_realizations",
                std=spread, N=N, m=m, seed=_seed_label(seed),
                mc_se=float(np.mean(se)), flag=range_flag(mean),
            )
        )
        report.samples[(A, kind)] = S
    return report


def _as_keys(seed):
    if isinstance(seed, (tuple, list)):
        return tuple(seed)
    if seed is None:
        return (0,)
    return (int(seed),)


def main_effects(model, input_model: InputModel, i: int, grid, m=100, N_inner=1000, seed=0, method="auto"):
    """Main-effect curve E[Z_n(X) | X_i = x] with a 95% realization band.

    Returns ``(mean, lower, upper)``, one value per grid point.
    """
    from .gp.sampling import sample_posterior

    d = input_model.dim
    if not 0 <= int(i) < d:
        raise ArgumentError(f"variable {i} out of range")
    grid = np.asarray(grid, dtype=float).ravel()
    lo, hi = input_model.marginals[i].support
    if np.any(~np.isfinite(grid)) or np.any((grid < lo) | (grid > hi)):
        raise ArgumentError("grid values must lie in the support of the marginal")
    rng = stream(*_as_keys(seed), "main-effects")
    inner = input_model.from_unit(rng.random((N_inner, d)))
    P = np.repeat(inner[None, :, :], grid.size, axis=0)
    P[:, :, i] = grid[:, None]
    Z = sample_posterior(model, P.reshape(-1, d), m, seed=stream(*_as_keys(seed), "gp-paths"), method=method)
    curves = Z.reshape(m, grid.size, N_inner).mean(axis=2)
    lower, upper = np.percentile(curves, [2.5, 97.5], axis=0)
    return curves.mean(axis=0), lower, upper
