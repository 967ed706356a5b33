"""Stationary covariance kernels and their spectral measures.

Three modes are available:

* ``isotropic``: one correlation length, kernel of the Euclidean distance;
* ``tensorized``: product of one-dimensional kernels, one length per input;
* ``anisotropic``: one-dimensional closed form evaluated on the scaled norm
  ``sqrt(sum((h_i / theta_i)**2))``.

For the squared exponential kernel the last two coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ArgumentError

FAMILIES = ("squared_exponential", "matern", "gamma_exponential")
MATERN_NUS = (0.5, 1.5, 2.5)
MODES = ("isotropic", "tensorized", "anisotropic")


@dataclass(frozen=True, eq=False)
class Kernel:
    family: str = "matern"
    lengthscales: np.ndarray = None
    variance: float = 1.0
    mode: str = "tensorized"
    nu: float = 2.5
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ArgumentError(f"unknown kernel family {self.family!r}")
        if self.mode not in MODES:
            raise ArgumentError(f"unknown kernel mode {self.mode!r}")
        if self.family == "matern" and float(self.nu) not in MATERN_NUS:
            raise ArgumentError("only Matern nu in {1/2, 3/2, 5/2} is supported")
        if self.family == "gamma_exponential" and not 0 < self.gamma <= 2:
            raise ArgumentError("gamma must lie in (0, 2]")
        if self.variance < 0:
            raise ArgumentError("kernel variance must be non-negative")
        if self.lengthscales is not None:
            th = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
            if np.any(~(th > 0)):
                raise ArgumentError("correlation lengths must be positive")
            object.__setattr__(self, "lengthscales", th)

    @property
    def name(self) -> str:
        if self.family == "matern":
            return f"matern{int(2 * self.nu)}/2"
        if self.family == "gamma_exponential":
            return f"gamma_exponential({self.gamma:g})"
        return self.family

    def with_params(self, lengthscales=None, variance=None) -> "Kernel":
        kw = {}
        if lengthscales is not None:
            kw["lengthscales"] = np.asarray(lengthscales, dtype=float)
        if variance is not None:
            kw["variance"] = float(variance)
        return replace(self, **kw)

    def _theta(self, d):
        th = self.lengthscales
        if th is None:
            raise ArgumentError("kernel has no correlation lengths")
        if th.size == 1:
            return np.full(d, th[0])
        if th.size != d:
            raise ArgumentError(f"{th.size} correlation lengths for dimension {d}")
        return th

    def correlation(self, X1, X2) -> np.ndarray:
        """Correlation matrix r(x, x') between rows of X1 and X2."""
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        if X1.shape[1] != X2.shape[1]:
            raise ArgumentError("point dimensions differ")
        th = self._theta(X1.shape[1])
        A, B = X1 / th, X2 / th
        if self.mode == "tensorized" and self.family != "squared_exponential":
            out = np.ones((A.shape[0], B.shape[0]))
            for i in range(A.shape[1]):
                h = np.abs(A[:, i, None] - B[None, :, i])
                out *= correlation_of_distance(self.family, h, self.nu, self.gamma)
            return out
        r = cdist(A, B)
        return correlation_of_distance(self.family, r, self.nu, self.gamma)

    def __call__(self, X1, X2) -> np.ndarray:
        return self.variance * self.correlation(X1, X2)

    def spectral_sample(self, d: int, size: int, rng) -> np.ndarray:
        """Draw ``size`` frequency vectors from the normalized spectral measure."""
        th = self._theta(d)
        z = rng.standard_normal((size, d))
        if self.family == "squared_exponential":
            return z / th
        # Gaussian scale mixtures: one mixing variable per input for product kernels
        shape = (size, d) if self.mode == "tensorized" else (size, 1)
        if self.family == "matern":
            dof = 2.0 * self.nu
            g = rng.chisquare(dof, size=shape)
            return z * np.sqrt(dof / g) / th
        alpha = self.gamma / 2.0
        scale = np.sqrt(2.0 * _positive_stable(alpha, shape, rng))
        return z * scale / th


def correlation_of_distance(family, r, nu=2.5, gamma=1.0):
    r = np.asarray(r, dtype=float)
    if family == "squared_exponential":
        return np.exp(-0.5 * r * r)
    if family == "matern":
        if nu == 0.5:
            return np.exp(-r)
        if nu == 1.5:
            s = math.sqrt(3.0) * r
            return (1.0 + s) * np.exp(-s)
        s = math.sqrt(5.0) * r
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    return np.exp(-(r**gamma))


def _positive_stable(alpha, shape, rng):
    # Kanter's representation: Laplace transform exp(-s**alpha)
    if alpha >= 1.0:
        return np.ones(shape)
    u = rng.uniform(0.0, math.pi, size=shape)
    e = rng.exponential(size=shape)
    return (np.sin(alpha * u) / np.sin(u)) ** (1.0 / alpha) * (
        np.sin((1.0 - alpha) * u) / e
    ) ** ((1.0 - alpha) / alpha)


def kernel_eval(kernel: Kernel, x, x2) -> float:
    """k(x, x') for two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise ArgumentError("point dimensions differ")
    return float(kernel(x[None, :], x2[None, :])[0, 0])
