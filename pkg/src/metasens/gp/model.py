"""Universal kriging: hyperparameter estimation, prediction, LOO residuals.

With ``R`` the correlation matrix of the design (plus ``Delta / sigma^2``
for noisy observations), ``F`` the trend matrix and ``L`` the Cholesky
factor of ``R``, every quantity is computed through the whitened system
``L^{-1} F = Q_f R_f``:

* ``beta = R_f^{-1} Q_f^T L^{-1} Y`` (generalized least squares),
* ``sigma^2 = |L^{-1}(Y - F beta)|^2 / (n - p)`` (REML, noise-free case),
* ``k_n(x, x') = sigma^2 [r(x, x') - r_t^T r_t' + g^T g']`` with
  ``r_t = L^{-1} r(x)`` and ``g = R_f^{-T} (L^{-1} F)^T r_t - R_f^{-T} f(x)``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.optimize import minimize, minimize_scalar

from ..errors import (
    ArgumentError,
    IllConditioningError,
    NumericalBreakdownError,
    TrendError,
)
from ..rng import stream
from .kernels import Kernel
from .trend import TrendSpec

NUGGETS = (0.0,) + tuple(10.0**k for k in range(-12, -5))
NEGATIVE_VARIANCE_TOL = 1e-9
THETA_BOX = (1e-3, 1e3)
START_BOX = (0.05, 2.0)


def cholesky_with_nugget(M):
    """Lower Cholesky factor of M, adding jitter (relative to the mean diagonal) if needed."""
    scale = float(np.mean(np.diag(M))) or 1.0
    eye = np.eye(M.shape[0])
    for jit in NUGGETS:
        try:
            L = scipy.linalg.cholesky(M + (jit * scale) * eye if jit else M, lower=True)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return L, jit
    raise NumericalBreakdownError(
        f"matrix not positive definite even with jitter {NUGGETS[-1]:g}"
    )


class _Whitened:
    """Factorization of (R_eff, F) shared by the objective and the model."""

    def __init__(self, R, F):
        self.L, self.nugget = cholesky_with_nugget(R)
        self.Ft = self.solve_l(F)
        self.Qf, self.Rf = np.linalg.qr(self.Ft)
        self.logdet_R = 2.0 * float(np.sum(np.log(np.diag(self.L))))
        self.logdet_FRF = 2.0 * float(np.sum(np.log(np.abs(np.diag(self.Rf)))))

    def solve_l(self, B):
        return scipy.linalg.solve_triangular(self.L, B, lower=True, check_finite=False)

    def solve_lt(self, B):
        return scipy.linalg.solve_triangular(self.L, B, lower=True, trans="T", check_finite=False)

    def gls(self, Y):
        yt = self.solve_l(Y)
        beta = scipy.linalg.solve_triangular(self.Rf, self.Qf.T @ yt, check_finite=False)
        return beta, yt - self.Ft @ beta

    def loo_residuals(self, Y):
        # Dubrule's virtual cross-validation for universal kriging
        _, rt = self.gls(Y)
        W = self.solve_l(np.eye(self.L.shape[0]))
        diag = np.einsum("ij,ij->j", W, W) - np.einsum("ij,ij->j", self.Qf.T @ W, self.Qf.T @ W)
        return (W.T @ rt) / diag


def _reml_nll(wh: _Whitened, Y, n, p, sigma2=None):
    _, rt = wh.gls(Y)
    quad = float(rt @ rt)
    if sigma2 is None:
        sigma2 = quad / (n - p)
    if sigma2 <= 0:
        return -math.inf if quad == 0 else math.inf, 0.0
    nll = 0.5 * ((n - p) * math.log(sigma2) + wh.logdet_R + wh.logdet_FRF + quad / sigma2)
    return nll, sigma2


def _noisy_profile(R, F, Y, noise_var, var_y):
    """Optimize sigma^2 for fixed correlation R in the noisy case (1-D search)."""
    n, p = F.shape

    def nll(log_s2):
        s2 = math.exp(log_s2)
        try:
            wh = _Whitened(R + np.diag(noise_var / s2), F)
        except NumericalBreakdownError:
            return 1e300
        return _reml_nll(wh, Y, n, p, s2)[0]

    scale = max(var_y, 1e-300)
    res = minimize_scalar(
        nll, bounds=(math.log(scale * 1e-8), math.log(scale * 1e3)), method="bounded"
    )
    return math.exp(res.x)


@dataclass(eq=False)
class GpModel:
    """Fitted universal-kriging model (immutable by convention)."""

    X: np.ndarray
    Y: np.ndarray
    trend: TrendSpec
    kernel: Kernel
    noise_var: np.ndarray = None
    estimator: str = "max_likelihood"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float).ravel()
        if self.noise_var is not None:
            self.noise_var = np.broadcast_to(
                np.asarray(self.noise_var, dtype=float), self.Y.shape
            ).copy()
        self.F = self.trend(self.X)
        self._wh = _Whitened(self._r_eff(self.kernel), self.F)
        self.beta, rt = self._wh.gls(self.Y)
        self.alpha = self._wh.solve_lt(rt)  # R_eff^{-1} (Y - F beta)

    def _r_eff(self, kernel):
        R = kernel.correlation(self.X, self.X)
        if self.noise_var is not None:
            if kernel.variance <= 0:
                raise ArgumentError("noisy observations need a positive process variance")
            R = R + np.diag(self.noise_var / kernel.variance)
        return R

    @property
    def sigma2(self) -> float:
        return float(self.kernel.variance)

    @property
    def theta(self) -> np.ndarray:
        return self.kernel.lengthscales

    @property
    def nugget(self) -> float:
        return self._wh.nugget

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    # -- posterior moments ------------------------------------------------
    def _parts(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ArgumentError(f"expected points of dimension {self.d}, got {x.shape[1]}")
        r = self.kernel.correlation(self.X, x)             # n x m
        rt = self._wh.solve_l(r)
        f = self.trend(x)                                   # m x p
        g = scipy.linalg.solve_triangular(
            self._wh.Rf, self._wh.Ft.T @ rt - f.T, trans="T", check_finite=False
        )
        return x, r, rt, f, g

    def mean(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.trend(x) @ self.beta + self.kernel.correlation(x, self.X) @ self.alpha

    def _clamp(self, var):
        floor = -NEGATIVE_VARIANCE_TOL * max(self.sigma2, 1e-300)
        if np.any(var < floor):
            raise NumericalBreakdownError(
                f"posterior variance {var.min():.3e} below tolerance {floor:.3e}"
            )
        return np.maximum(var, 0.0)

    def predict(self, x):
        """Posterior mean m_n(x) and variance k_n(x, x); scalars for a single point."""
        single = np.ndim(x) == 1
        x, r, rt, f, g = self._parts(x)
        mean = f @ self.beta + r.T @ self.alpha
        var = self.sigma2 * (1.0 - np.einsum("ij,ij->j", rt, rt) + np.einsum("ij,ij->j", g, g))
        var = self._clamp(var)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict_cov(self, x1, x2=None) -> np.ndarray:
        """Posterior covariance matrix k_n between rows of x1 and x2."""
        single = np.ndim(x1) == 1 and (x2 is None or np.ndim(x2) == 1)
        _, r1, rt1, _, g1 = self._parts(x1)
        if x2 is None:
            xx, rt2, g2 = np.atleast_2d(x1), rt1, g1
        else:
            xx, _, rt2, _, g2 = self._parts(x2)
        k0 = self.kernel.correlation(np.atleast_2d(x1), xx)
        cov = self.sigma2 * (k0 - rt1.T @ rt2 + g1.T @ g2)
        if single:
            return float(cov[0, 0])
        return cov

    def kriging_weights(self, x) -> np.ndarray:
        """W such that m_n(x) = W @ Y for every response vector Y (m x n)."""
        _, _, rt, _, g = self._parts(x)
        v = scipy.linalg.solve_triangular(self._wh.Rf, g, check_finite=False)
        lam = self._wh.solve_lt(rt - self._wh.Ft @ v)
        return lam.T

    def loo_residuals(self) -> np.ndarray:
        """Closed-form leave-one-out residuals y_i - m_{n,-i}(x_i) at fixed hyperparameters."""
        return self._wh.loo_residuals(self.Y)

    __call__ = mean

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        k = self.kernel
        return {
            "type": "gp",
            "design": self.X.tolist(),
            "responses": [repr(float(v)) for v in self.Y],
            "trend": self.trend.tolist(),
            "kernel": {
                "family": k.family,
                "mode": k.mode,
                "nu": k.nu,
                "gamma": k.gamma,
                "lengthscales": [repr(float(t)) for t in k.lengthscales],
                "variance": repr(float(k.variance)),
            },
            "beta": [repr(float(b)) for b in self.beta],
            "noise_var": None if self.noise_var is None else self.noise_var.tolist(),
            "nugget": self.nugget,
            "estimator": self.estimator,
            "metadata": self.metadata,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_dict(cls, data) -> "GpModel":
        kd = data["kernel"]
        kernel = Kernel(
            kd["family"],
            np.array([float(t) for t in kd["lengthscales"]]),
            float(kd["variance"]),
            kd["mode"],
            kd.get("nu", 2.5),
            kd.get("gamma", 1.0),
        )
        return cls(
            np.array(data["design"], dtype=float),
            np.array([float(v) for v in data["responses"]]),
            TrendSpec(data["trend"]),
            kernel,
            None if data.get("noise_var") is None else np.array(data["noise_var"]),
            data.get("estimator", "max_likelihood"),
            data.get("metadata", {}),
        )

    @classmethod
    def load(cls, path) -> "GpModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_design(X, Y, F, noisy):
    n = X.shape[0]
    if Y.shape[0] != n:
        raise ArgumentError(f"{Y.shape[0]} responses for {n} design points")
    if not np.all(np.isfinite(Y)):
        raise ArgumentError("responses must be finite")
    if n <= F.shape[1]:
        raise ArgumentError(f"need more design points ({n}) than trend functions ({F.shape[1]})")
    if np.linalg.matrix_rank(F) < F.shape[1]:
        raise TrendError("trend functions are linearly dependent on the design")
    if not noisy and np.unique(X, axis=0).shape[0] < n:
        raise IllConditioningError("duplicate design points with noise-free observations")


def fit(
    X,
    Y,
    trend: TrendSpec | None = None,
    kernel: Kernel | None = None,
    estimator: str = "max_likelihood",
    noise_std=None,
    n_starts: int = 10,
    seed=0,
    theta=None,
    sigma2=None,
    max_evals: int | None = None,
) -> GpModel:
    """Fit a universal-kriging model.

    Parameters
    ----------
    X, Y : design (n, d) and responses (n,).
    trend : monomial trend, constant by default.
    kernel : family/mode template; its correlation lengths are ignored unless
        ``theta`` fixes them.
    estimator : ``"max_likelihood"`` (restricted likelihood) or ``"loo_cv"``
        (closed-form leave-one-out mean-square error) for the correlation lengths.
    noise_std : standard deviation of the observation noise (scalar or per point).
    theta, sigma2 : fix the hyperparameters instead of estimating them.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).ravel()
    n, d = X.shape
    trend = trend or TrendSpec.constant(d)
    kernel = kernel or Kernel()
    if estimator not in ("max_likelihood", "loo_cv"):
        raise ArgumentError(f"unknown estimator {estimator!r}")
    noise_var = None
    if noise_std is not None:
        noise_var = np.broadcast_to(np.asarray(noise_std, dtype=float) ** 2, (n,)).copy()
        if np.any(noise_var < 0):
            raise ArgumentError("noise standard deviation must be non-negative")
    F = trend(X)
    _check_design(X, Y, F, noise_var is not None)
    p = F.shape[1]
    var_y = float(np.var(Y)) if n > 1 else 1.0

    span = np.ptp(X, axis=0)
    span = np.where(span > 0, span, 1.0)
    iso = kernel.mode == "isotropic"
    if iso:
        span = np.array([float(np.mean(span))])
    lo = np.log(THETA_BOX[0] * span)
    hi = np.log(THETA_BOX[1] * span)

    def expand(log_th):
        return np.exp(np.broadcast_to(log_th, (1 if iso else d,)))

    def components(log_th):
        ker = kernel.with_params(lengthscales=expand(log_th), variance=1.0)
        R = ker.correlation(X, X)
        if noise_var is None:
            s2 = sigma2
            return _Whitened(R, F), s2
        s2 = sigma2 if sigma2 is not None else _noisy_profile(R, F, Y, noise_var, var_y)
        return _Whitened(R + np.diag(noise_var / s2), F), s2

    def objective(log_th):
        try:
            wh, s2 = components(log_th)
        except NumericalBreakdownError:
            return 1e300
        if estimator == "loo_cv":
            e = wh.loo_residuals(Y)
            return float(np.mean(e * e))
        return _reml_nll(wh, Y, n, p, s2)[0]

    meta = {"estimator": estimator}
    if theta is not None:
        log_best = np.log(np.broadcast_to(np.asarray(theta, dtype=float), (1 if iso else d,)))
        meta["optimizer"] = {"fixed_theta": True}
    else:
        rng = stream(*(seed if isinstance(seed, (tuple, list)) else (seed,)), "gp-starts")
        starts = np.log(span * np.exp(
            rng.uniform(np.log(START_BOX[0]), np.log(START_BOX[1]), size=(n_starts, span.size))
        ))
        budget = max_evals or 100 + 100 * span.size
        best_val, log_best, evals, best_start = math.inf, starts[0], 0, 0
        for k, x0 in enumerate(starts):
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                bounds=list(zip(lo, hi)),
                options={"maxfev": budget, "xatol": 1e-4, "fatol": 1e-10},
            )
            evals += int(res.nfev)
            if res.fun < best_val:
                best_val, log_best, best_start = float(res.fun), np.asarray(res.x), k
        at_bound = bool(np.any(np.isclose(log_best, lo, atol=1e-3) | np.isclose(log_best, hi, atol=1e-3)))
        meta["optimizer"] = {
            "method": "nelder-mead",
            "starts": int(n_starts),
            "evaluations": evals,
            "best_start": best_start,
            "objective": best_val,
            "at_bound": at_bound,
        }
        if at_bound:
            warnings.warn("correlation-length optimum lies on the search-box boundary", stacklevel=2)

    th = expand(log_best).copy()
    wh, s2 = components(log_best)
    if s2 is None:
        s2 = _reml_nll(wh, Y, n, p)[1]
    return GpModel(X, Y, trend, kernel.with_params(lengthscales=th, variance=s2), noise_var, estimator, meta)
