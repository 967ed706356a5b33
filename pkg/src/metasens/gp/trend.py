"""Monomial trend functions f(x) for universal kriging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError


@dataclass(frozen=True, eq=False)
class TrendSpec:
    """Trend basis as monomial exponent rows; an all-zero row is the constant."""

    exponents: np.ndarray

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.exponents, dtype=int))
        if e.shape[0] < 1:
            raise ArgumentError("a trend needs at least one function")
        if np.any(e < 0):
            raise ArgumentError("monomial exponents must be non-negative")
        object.__setattr__(self, "exponents", e)

    @property
    def p(self) -> int:
        return self.exponents.shape[0]

    @property
    def d(self) -> int:
        return self.exponents.shape[1]

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ArgumentError(f"trend expects dimension {self.d}, got {X.shape[1]}")
        F = np.ones((X.shape[0], self.p))
        for j, row in enumerate(self.exponents):
            for i in np.flatnonzero(row):
                F[:, j] *= X[:, i] ** row[i]
        return F

    @classmethod
    def constant(cls, d: int) -> "TrendSpec":
        return cls(np.zeros((1, d), dtype=int))

    @classmethod
    def linear(cls, d: int) -> "TrendSpec":
        return cls(np.vstack([np.zeros((1, d), dtype=int), np.eye(d, dtype=int)]))

    def tolist(self):
        return self.exponents.tolist()


def ishigami_trend() -> TrendSpec:
    """{1, x2, x2^2, x1^3, x2^3, x1^4, x2^4}, exactly as used for the Ishigami study."""
    return TrendSpec(
        [
            [0, 0, 0],
            [0, 1, 0],
            [0, 2, 0],
            [3, 0, 0],
            [0, 3, 0],
            [4, 0, 0],
            [0, 4, 0],
        ]
    )
