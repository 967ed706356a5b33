"""Orthonormal polynomial families and total-degree tensor bases.

Each family is orthonormal with respect to a *probability* measure:

============  =====================================  ====================
family        weight (normalized to unit mass)        standard variable
============  =====================================  ====================
legendre      1/2 on [-1, 1]                          U(-1, 1)
hermite       exp(-x^2/2)/sqrt(2 pi)                  N(0, 1)
laguerre(a)   x^a exp(-x) / Gamma(a+1) on x > 0       Gamma(a+1, 1)
jacobi(a,b)   (1-x)^a (1+x)^b on [-1, 1]              Beta on [-1, 1]
============  =====================================  ====================

Values come from the orthonormal three-term recurrence

    x psi_k = b_{k+1} psi_{k+1} + a_k psi_k + b_k psi_{k-1},

so no factorial or Gamma-function normalization is ever formed explicitly.
The sign convention follows the classical families (Laguerre alternates).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from .errors import ArgumentError, ResourceError

MAX_DEGREE = 30
MAX_CARDINALITY = 10**6


@dataclass(frozen=True)
class PolynomialFamily:
    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("legendre", "hermite", "laguerre", "jacobi"):
            raise ArgumentError(f"unknown polynomial family {self.kind!r}")
        if self.kind in ("laguerre", "jacobi") and not (self.a > -1 and self.b > -1):
            raise ArgumentError("weight exponents must exceed -1")

    @property
    def tag(self) -> str:
        if self.kind == "laguerre":
            return f"laguerre({self.a:g})"
        if self.kind == "jacobi":
            return f"jacobi({self.a:g},{self.b:g})"
        return self.kind

    @classmethod
    def from_tag(cls, tag: str) -> "PolynomialFamily":
        tag = tag.strip()
        if "(" not in tag:
            return cls(tag)
        kind, args = tag[:-1].split("(")
        vals = [float(v) for v in args.split(",")]
        return cls(kind, *vals)


LEGENDRE = PolynomialFamily("legendre")
HERMITE = PolynomialFamily("hermite")


def laguerre(a: float = 0.0) -> PolynomialFamily:
    return PolynomialFamily("laguerre", a)


def jacobi(a: float, b: float) -> PolynomialFamily:
    return PolynomialFamily("jacobi", a, b)


def family_for(standard: str) -> PolynomialFamily:
    """Family paired with a standardized variable kind ('uniform' or 'normal')."""
    return LEGENDRE if standard == "uniform" else HERMITE


@lru_cache(maxsize=None)
def recurrence_coefficients(family: PolynomialFamily, n: int):
    """Orthonormal recurrence coefficients (a_0..a_{n-1}, b_0..b_n), b_0 unused."""
    k = np.arange(n + 1, dtype=float)
    if family.kind == "legendre":
        alpha = np.zeros(n + 1)
        beta = np.zeros(n + 1)
        beta[1:] = k[1:] / np.sqrt(4.0 * k[1:] ** 2 - 1.0)
    elif family.kind == "hermite":
        alpha = np.zeros(n + 1)
        beta = np.sqrt(k)
    elif family.kind == "laguerre":
        a = family.a
        alpha = 2.0 * k + a + 1.0
        beta = np.sqrt(k * (k + a))
    else:
        a, b = family.a, family.b
        s = 2.0 * k + a + b
        alpha = np.empty(n + 1)
        alpha[0] = (b - a) / (a + b + 2.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha[1:] = (b * b - a * a) / (s[1:] * (s[1:] + 2.0))
        beta = np.zeros(n + 1)
        if n >= 1:
            beta[1] = math.sqrt(4.0 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b)))
        kk = k[2:]
        ss = s[2:]
        beta[2:] = np.sqrt(
            4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) / (ss**2 * (ss + 1.0) * (ss - 1.0))
        )
    return alpha, beta


def eval_all(family: PolynomialFamily, max_degree: int, x) -> np.ndarray:
    """Table of psi_0..psi_p at x; shape ``x.shape + (p + 1,)``."""
    if max_degree < 0:
        raise ArgumentError("degree must be non-negative")
    if max_degree > MAX_DEGREE:
        raise ArgumentError(f"degree {max_degree} exceeds the configured maximum {MAX_DEGREE}")
    x = np.asarray(x, dtype=float)
    alpha, beta = recurrence_coefficients(family, max_degree)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    # Laguerre is generated with alternating sign to match L_k^a
    sign = -1.0 if family.kind == "laguerre" else 1.0
    if max_degree >= 1:
        out[..., 1] = sign * (x - alpha[0]) / beta[1]
    for k in range(1, max_degree):
        out[..., k + 1] = (
            sign * (x - alpha[k]) * out[..., k] - beta[k] * out[..., k - 1]
        ) / beta[k + 1]
    return out


def eval_orthonormal(family: PolynomialFamily, degree: int, x):
    """psi_degree(x) for the orthonormal family."""
    vals = eval_all(family, int(degree), x)[..., int(degree)]
    return vals if np.ndim(vals) else float(vals)


def gauss_quadrature(family: PolynomialFamily, n: int):
    """Gauss nodes and probability weights (summing to 1) matched to the family's weight."""
    if family.kind == "legendre":
        x, w = special.roots_legendre(n)
    elif family.kind == "hermite":
        x, w = special.roots_hermitenorm(n)
    elif family.kind == "laguerre":
        x, w = special.roots_genlaguerre(n, family.a)
    else:
        x, w = special.roots_jacobi(n, family.a, family.b)
    return x, w / w.sum()


def _compositions(total, d):
    # lexicographically descending compositions of `total` into d parts
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    """Set of degree multi-indices, rows of an (card, d) integer array."""

    indices: np.ndarray
    p: int

    @property
    def d(self) -> int:
        return self.indices.shape[1]

    def __len__(self) -> int:
        return self.indices.shape[0]

    def total_degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    def position(self, alpha) -> int:
        hits = np.flatnonzero(np.all(self.indices == np.asarray(alpha), axis=1))
        if not hits.size:
            raise KeyError(tuple(alpha))
        return int(hits[0])

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"a{i + 1}" for i in range(self.d)])
            w.writerows(self.indices.tolist())

    @classmethod
    def from_csv(cls, path) -> "MultiIndexSet":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        idx = np.array([[int(v) for v in r] for r in rows if r], dtype=int)
        return cls(idx, int(idx.sum(axis=1).max()))


def enumerate_total_degree(d: int, p: int, cap: int = MAX_CARDINALITY) -> MultiIndexSet:
    """All alpha in N^d with |alpha| <= p, graded then lexicographically descending.

    >>> len(enumerate_total_degree(3, 5))
    56
    """
    if d < 1 or p < 0:
        raise ArgumentError("need d >= 1 and p >= 0")
    card = math.comb(d + p, p)
    if card > cap:
        raise ResourceError(f"basis of size C({d}+{p},{p}) = {card} exceeds the cap {cap}")
    rows = [c for k in range(p + 1) for c in _compositions(k, d)]
    return MultiIndexSet(np.array(rows, dtype=int).reshape(card, d), p)


@dataclass(frozen=True, eq=False)
class MultivariateBasis:
    """Tensor-product basis Psi_alpha(u) = prod_i psi^(i)_{alpha_i}(u_i)."""

    families: tuple
    index_set: MultiIndexSet

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        if len(self.families) != self.index_set.d:
            raise ArgumentError("one polynomial family per dimension required")

    @property
    def d(self) -> int:
        return self.index_set.d

    @property
    def size(self) -> int:
        return len(self.index_set)

    def evaluate(self, u) -> np.ndarray:
        """Information-matrix rows at standardized points ``u`` of shape (n, d)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[1] != self.d:
            raise ArgumentError(f"expected points of dimension {self.d}, got {u.shape[1]}")
        idx = self.index_set.indices
        out = np.ones((u.shape[0], self.size))
        for i, fam in enumerate(self.families):
            deg = idx[:, i]
            cols = np.flatnonzero(deg)
            if cols.size == 0:
                continue
            # psi_0 = 1, so only terms that involve variable i are touched
            table = eval_all(fam, int(deg.max()), u[:, i])
            out[:, cols] *= table[:, deg[cols]]
        return out


def total_degree_basis(families, p: int) -> MultivariateBasis:
    families = tuple(families)
    return MultivariateBasis(families, enumerate_total_degree(len(families), p))


def eval_basis_row(basis: MultivariateBasis, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ArgumentError("eval_basis_row takes a single point")
    return basis.evaluate(u[None, :])[0]
