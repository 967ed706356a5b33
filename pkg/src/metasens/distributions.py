"""Probabilistic input models, isoprobabilistic transforms and designs.

Independent marginals are mapped to a standardized space: uniform marginals
to U(-1, 1) by the affine map, every other marginal to N(0, 1) through
``u = Phi^{-1}(F(x))``.  Lognormal and Gumbel marginals are parameterized by
the mean and standard deviation of the variable itself.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import ArgumentError, DomainError
from .rng import as_generator

EULER_GAMMA = 0.57721566490153286061


def lognormal_params(mean: float, std: float) -> tuple[float, float]:
    """(lambda, zeta) of the underlying normal for a lognormal of given mean/std."""
    zeta2 = math.log1p((std / mean) ** 2)
    return math.log(mean) - 0.5 * zeta2, math.sqrt(zeta2)


def gumbel_params(mean: float, std: float) -> tuple[float, float]:
    """(location, scale) of a max-Gumbel of given mean/std."""
    scale = std * math.sqrt(6.0) / math.pi
    return mean - EULER_GAMMA * scale, scale


class MarginalDistribution:
    """Base class for the univariate input laws.

    Subclasses provide ``_frozen`` (a scipy frozen distribution) and
    ``support``; ``standard`` is ``"uniform"`` or ``"normal"`` and names the
    standardized variable the marginal maps to.
    """

    standard = "normal"
    kind = "?"

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def _check_q(self, q):
        q = np.asarray(q, dtype=float)
        if np.any(~(q > 0.0) | ~(q < 1.0)):
            raise DomainError("quantile level must lie in the open interval (0, 1)")
        return q

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        if np.any(~np.isfinite(x)):
            raise DomainError(f"{self.kind}: non-finite value")
        if np.any((x < lo) | (x > hi)):
            raise DomainError(f"{self.kind}: value outside support [{lo}, {hi}]")
        return x

    def quantile(self, q):
        q = self._check_q(q)
        out = self._frozen.ppf(q)
        return out if out.ndim else float(out)

    def cdf(self, x):
        out = self._frozen.cdf(np.asarray(x, dtype=float))
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return float(self._frozen.mean())

    def std(self) -> float:
        return float(self._frozen.std())

    def to_standard(self, x):
        x = self._check_x(x)
        f = self._frozen
        # split at the median so each tail keeps full relative precision
        lower = f.cdf(x) <= 0.5
        u = np.where(lower, stats.norm.ppf(f.cdf(x)), -stats.norm.ppf(f.sf(x)))
        return u if u.ndim else float(u)

    def from_standard(self, u):
        u = np.asarray(u, dtype=float)
        f = self._frozen
        x = np.where(u <= 0.0, f.ppf(stats.norm.cdf(u)), f.isf(stats.norm.cdf(-u)))
        return x if x.ndim else float(x)


@dataclass(frozen=True)
class Uniform(MarginalDistribution):
    a: float
    b: float
    standard = "uniform"
    kind = "uniform"

    def __post_init__(self):
        if not self.b > self.a:
            raise ArgumentError("uniform requires b > a")

    @property
    def support(self):
        return (self.a, self.b)

    def params(self):
        return {"a": self.a, "b": self.b}

    @cached_property
    def _frozen(self):
        return stats.uniform(loc=self.a, scale=self.b - self.a)

    def quantile(self, q):
        q = self._check_q(q)
        out = self.a + (self.b - self.a) * q
        return out if out.ndim else float(out)

    def to_standard(self, x):
        x = self._check_x(x)
        u = (2.0 * x - self.a - self.b) / (self.b - self.a)
        return u if u.ndim else float(u)

    def from_standard(self, u):
        u = np.asarray(u, dtype=float)
        x = 0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * u
        return x if x.ndim else float(x)


@dataclass(frozen=True)
class Gaussian(MarginalDistribution):
    mu: float
    sigma: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ArgumentError("gaussian requires sigma > 0")

    @property
    def support(self):
        return (-math.inf, math.inf)

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}

    @cached_property
    def _frozen(self):
        return stats.norm(loc=self.mu, scale=self.sigma)

    def to_standard(self, x):
        x = self._check_x(x)
        u = (x - self.mu) / self.sigma
        return u if u.ndim else float(u)

    def from_standard(self, u):
        x = self.mu + self.sigma * np.asarray(u, dtype=float)
        return x if x.ndim else float(x)


@dataclass(frozen=True)
class Lognormal(MarginalDistribution):
    """Lognormal given by the mean and std of the variable (not of its log)."""

    mean_value: float
    std_value: float
    kind = "lognormal"

    def __post_init__(self):
        if not (self.mean_value > 0 and self.std_value > 0):
            raise ArgumentError("lognormal requires mean > 0 and std > 0")

    @property
    def support(self):
        return (0.0, math.inf)

    def params(self):
        return {"mean": self.mean_value, "std": self.std_value}

    @cached_property
    def _frozen(self):
        lam, zeta = lognormal_params(self.mean_value, self.std_value)
        return stats.lognorm(s=zeta, scale=math.exp(lam))

    def _check_x(self, x):
        x = super()._check_x(x)
        if np.any(x <= 0):
            raise DomainError("lognormal: value must be positive")
        return x

    # exact through the log, no cdf round trip
    def to_standard(self, x):
        lam, zeta = lognormal_params(self.mean_value, self.std_value)
        u = (np.log(self._check_x(x)) - lam) / zeta
        return u if u.ndim else float(u)

    def from_standard(self, u):
        lam, zeta = lognormal_params(self.mean_value, self.std_value)
        x = np.exp(lam + zeta * np.asarray(u, dtype=float))
        return x if x.ndim else float(x)


@dataclass(frozen=True)
class Gumbel(MarginalDistribution):
    """Max-Gumbel given by the mean and std of the variable."""

    mean_value: float
    std_value: float
    kind = "gumbel"

    def __post_init__(self):
        if not self.std_value > 0:
            raise ArgumentError("gumbel requires std > 0")

    @property
    def support(self):
        return (-math.inf, math.inf)

    def params(self):
        return {"mean": self.mean_value, "std": self.std_value}

    @cached_property
    def _frozen(self):
        loc, scale = gumbel_params(self.mean_value, self.std_value)
        return stats.gumbel_r(loc=loc, scale=scale)


@dataclass(frozen=True)
class Gamma(MarginalDistribution):
    shape: float
    kind = "gamma"

    def __post_init__(self):
        if not self.shape > 0:
            raise ArgumentError("gamma requires shape > 0")

    @property
    def support(self):
        return (0.0, math.inf)

    def params(self):
        return {"shape": self.shape}

    @cached_property
    def _frozen(self):
        return stats.gamma(a=self.shape)


@dataclass(frozen=True)
class Beta(MarginalDistribution):
    """Density proportional to (1 - x)^a (1 + x)^b on [-1, 1]."""

    a: float
    b: float
    kind = "beta"

    def __post_init__(self):
        if not (self.a > -1 and self.b > -1):
            raise ArgumentError("beta requires a, b > -1")

    @property
    def support(self):
        return (-1.0, 1.0)

    def params(self):
        return {"a": self.a, "b": self.b}

    @cached_property
    def _frozen(self):
        return stats.beta(self.b + 1.0, self.a + 1.0, loc=-1.0, scale=2.0)


_KINDS = {
    "uniform": Uniform,
    "gaussian": Gaussian,
    "lognormal": Lognormal,
    "gumbel": Gumbel,
    "gamma": Gamma,
    "beta": Beta,
}


def marginal_from_dict(spec: dict) -> MarginalDistribution:
    """Build a marginal from ``{"kind": ..., **params}`` (config files, JSON)."""
    spec = dict(spec)
    kind = spec.pop("kind", None) or spec.pop("type", None)
    spec.pop("name", None)
    if kind not in _KINDS:
        raise ArgumentError(f"unknown distribution kind {kind!r}")
    cls = _KINDS[kind]
    if cls in (Lognormal, Gumbel):
        return cls(float(spec["mean"]), float(spec["std"]))
    return cls(**{k: float(v) for k, v in spec.items()})


def marginal_to_dict(dist: MarginalDistribution) -> dict:
    return {"kind": dist.kind, **dist.params()}


def quantile(dist: MarginalDistribution, q):
    return dist.quantile(q)


@dataclass(frozen=True)
class InputModel:
    """Independent marginals; the joint density is their product."""

    marginals: tuple
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) < 1:
            raise ArgumentError("an input model needs at least one marginal")
        names = tuple(self.names) or tuple(f"x{i + 1}" for i in range(len(self.marginals)))
        if len(names) != len(self.marginals):
            raise ArgumentError("one name per marginal required")
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return len(self.marginals)

    @property
    def standard_kinds(self) -> tuple:
        return tuple(m.standard for m in self.marginals)

    def _as_2d(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if x2.shape[1] != self.dim:
            raise ArgumentError(f"expected {self.dim} columns, got {x2.shape[1]}")
        return x2, single

    def to_standard(self, x):
        x2, single = self._as_2d(x)
        u = np.column_stack([m.to_standard(x2[:, i]) for i, m in enumerate(self.marginals)])
        return u[0] if single else u

    def from_standard(self, u):
        u2, single = self._as_2d(u)
        x = np.column_stack([m.from_standard(u2[:, i]) for i, m in enumerate(self.marginals)])
        return x[0] if single else x

    def from_unit(self, q):
        """Map an (n, d) array of probabilities to physical space."""
        q2, _ = self._as_2d(q)
        return np.column_stack([m.quantile(q2[:, i]) for i, m in enumerate(self.marginals)])

    def sample(self, n: int, method: str = "lhs", seed=0) -> "DesignMatrix":
        return sample(self, n, method, seed)

    def to_dict(self) -> dict:
        return {
            "variables": [
                {"name": nm, **marginal_to_dict(m)} for nm, m in zip(self.names, self.marginals)
            ]
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "InputModel":
        vars_ = spec["variables"]
        return cls(
            tuple(marginal_from_dict(v) for v in vars_),
            tuple(v.get("name", f"x{i + 1}") for i, v in enumerate(vars_)),
        )


def to_standard(model: InputModel, x):
    return model.to_standard(x)


def from_standard(model: InputModel, u):
    return model.from_standard(u)


_TINY = np.nextafter(0.0, 1.0)


def _unit_lhs(n, d, rng):
    q = np.empty((n, d))
    for j in range(d):
        strata = rng.permutation(n)
        cell = (strata + rng.random(n)) / n
        # keep each point strictly inside its own stratum after rounding
        q[:, j] = np.minimum(cell, np.nextafter((strata + 1) / n, 0.0))
    return np.maximum(q, _TINY)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """n x d experimental design in physical coordinates."""

    points: np.ndarray
    method: str
    seed: object
    model: InputModel = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def standardized(self) -> np.ndarray:
        return self.model.to_standard(self.points)

    def to_csv(self, path) -> None:
        write_points_csv(path, self.points, self.model.names)

    @classmethod
    def from_points(cls, model: InputModel, points, method="user", seed=None) -> "DesignMatrix":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != model.dim:
            raise ArgumentError(f"design has {pts.shape[1]} columns, model has {model.dim}")
        return cls(pts, method, seed, model)

    @classmethod
    def from_csv(cls, path, model: InputModel) -> "DesignMatrix":
        names, pts = read_points_csv(path)
        if list(names) != list(model.names):
            raise ArgumentError(f"CSV header {names} does not match model names {list(model.names)}")
        return cls.from_points(model, pts, method="csv")


def sample(model: InputModel, n: int, method: str = "lhs", seed=0) -> DesignMatrix:
    """Draw ``n`` points by plain Monte Carlo (``mc``) or random Latin hypercube (``lhs``)."""
    if int(n) < 1:
        raise ArgumentError("sample size must be at least 1")
    n = int(n)
    rng = as_generator(seed)
    if method == "mc":
        q = np.maximum(rng.random((n, model.dim)), _TINY)
    elif method == "lhs":
        q = _unit_lhs(n, model.dim, rng)
    else:
        raise ArgumentError(f"unknown sampling method {method!r}")
    return DesignMatrix(model.from_unit(q), method, seed, model)


def write_points_csv(path, points, names) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in np.atleast_2d(points):
            w.writerow([repr(float(v)) for v in row])


def read_points_csv(path):
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
