"""Least-squares polynomial chaos expansions.

Coefficients are obtained from a column-pivoted QR factorization of the
information matrix ``A[i, j] = Psi_j(u_i)``; the leverages ``h_i`` used by
the closed-form leave-one-out error are squared row norms of the thin
orthogonal factor.  Moments and Sobol' indices are sums of squared
coefficients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
import scipy.linalg

from .distributions import DesignMatrix, InputModel
from .errors import (
    ArgumentError,
    DegenerateLOOError,
    DegenerateModelError,
    IllPosedFitError,
    UnderdeterminedError,
)
from .orthopoly import (
    MultiIndexSet,
    MultivariateBasis,
    PolynomialFamily,
    enumerate_total_degree,
    family_for,
)
from .report import SobolEntry, SobolReport, range_flag

RANK_TOL = 1e-12
# leverages this close to 1 make the LOO quotient meaningless
LEVERAGE_TOL = 1e-10
PREDICT_CELLS = 2_000_000


@dataclass(eq=False)
class PceModel:
    basis: MultivariateBasis
    coefficients: np.ndarray
    input_model: InputModel
    empirical_error: float
    loo_error: float
    n: int
    response_variance: float
    design_seed: object = None
    metadata: dict = field(default_factory=dict)

    @property
    def normalized_empirical_error(self) -> float:
        return self.empirical_error / self.response_variance if self.response_variance > 0 else 0.0

    @property
    def normalized_loo_error(self) -> float:
        return self.loo_error / self.response_variance if self.response_variance > 0 else 0.0

    @property
    def degree(self) -> int:
        return self.basis.index_set.p

    def predict(self, x) -> np.ndarray:
        """Surrogate value at physical points ``x`` (n, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = self.input_model.to_standard(x)
        # row blocks keep the basis table small for large samples
        rows = max(1, PREDICT_CELLS // self.basis.size)
        out = np.empty(u.shape[0])
        for s in range(0, u.shape[0], rows):
            out[s: s + rows] = self.basis.evaluate(u[s: s + rows]) @ self.coefficients
        return out

    __call__ = predict

    def moments(self):
        return moments(self)

    def sobol_indices(self, request="first_order") -> SobolReport:
        return sobol_indices(self, request)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "type": "pce",
            "input_model": self.input_model.to_dict(),
            "families": [f.tag for f in self.basis.families],
            "degree": int(self.degree),
            "indices": self.basis.index_set.indices.tolist(),
            "coefficients": [repr(float(c)) for c in self.coefficients],
            "empirical_error": repr(float(self.empirical_error)),
            "loo_error": repr(float(self.loo_error)),
            "n": int(self.n),
            "response_variance": repr(float(self.response_variance)),
            "design_seed": self.design_seed,
            "metadata": self.metadata,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "PceModel":
        idx = np.array(data["indices"], dtype=int)
        basis = MultivariateBasis(
            tuple(PolynomialFamily.from_tag(t) for t in data["families"]),
            MultiIndexSet(idx, int(data["degree"])),
        )
        return cls(
            basis,
            np.array([float(c) for c in data["coefficients"]]),
            InputModel.from_dict(data["input_model"]),
            float(data["empirical_error"]),
            float(data["loo_error"]),
            int(data["n"]),
            float(data["response_variance"]),
            data.get("design_seed"),
            data.get("metadata", {}),
        )

    @classmethod
    def load(cls, path) -> "PceModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_families(model: InputModel) -> tuple:
    return tuple(family_for(k) for k in model.standard_kinds)


def _solve(A, y):
    """Pivoted-QR least squares; returns coefficients and leverages."""
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < A.shape[1]:
        raise IllPosedFitError(
            f"information matrix is rank deficient (numerical rank {rank} < {A.shape[1]})",
            rank=rank,
        )
    coef = np.empty(A.shape[1])
    coef[piv] = scipy.linalg.solve_triangular(R, Q.T @ y)
    return coef, np.einsum("ij,ij->i", Q, Q)


def _check_inputs(design: DesignMatrix, responses, basis: MultivariateBasis):
    y = np.asarray(responses, dtype=float).ravel()
    if y.shape[0] != design.n:
        raise ArgumentError(f"{y.shape[0]} responses for {design.n} design points")
    if not np.all(np.isfinite(y)):
        raise ArgumentError("responses must be finite")
    if basis.d != design.model.dim:
        raise ArgumentError("basis and input model dimensions differ")
    if design.n < basis.size:
        raise UnderdeterminedError(
            f"{design.n} points cannot determine {basis.size} coefficients"
        )
    return y


def fit(design: DesignMatrix, responses, basis: MultivariateBasis) -> PceModel:
    """Ordinary least-squares PCE on ``basis`` with empirical and LOO errors."""
    y = _check_inputs(design, responses, basis)
    A = basis.evaluate(design.standardized())
    coef, h = _solve(A, y)
    resid = y - A @ coef
    eps_emp = float(np.mean(resid**2))
    gap = 1.0 - h
    if np.any(gap < LEVERAGE_TOL):
        eps_loo = math.inf
    else:
        eps_loo = float(np.mean((resid / gap) ** 2))
    var_y = float(np.var(y, ddof=1)) if y.size > 1 else 0.0
    return PceModel(basis, coef, design.model, eps_emp, eps_loo, design.n, var_y, design.seed)


def loo_error_explicit(design: DesignMatrix, responses, basis: MultivariateBasis) -> float:
    """Leave-one-out error by brute force: n refits, each without one point."""
    y = _check_inputs(design, responses, basis)
    n = design.n
    if n < basis.size + 1:
        raise DegenerateLOOError(
            f"leave-one-out needs n >= card A + 1 (n={n}, card A={basis.size})"
        )
    A = basis.evaluate(design.standardized())
    keep = np.ones(n, dtype=bool)
    deltas = np.empty(n)
    for i in range(n):
        keep[i] = False
        Ai = A[keep]
        if np.linalg.matrix_rank(Ai) < basis.size:
            raise DegenerateLOOError(f"deleting point {i} leaves a rank-deficient system")
        coef = np.linalg.lstsq(Ai, y[keep], rcond=None)[0]
        deltas[i] = y[i] - A[i] @ coef
        keep[i] = True
    return float(np.mean(deltas**2))


def adaptive_fit(
    design: DesignMatrix,
    responses,
    family=None,
    p_min: int = 1,
    p_max: int = 10,
    oversampling: float = 2.0,
) -> PceModel:
    """Fit every admissible total degree in [p_min, p_max], keep the smallest LOO error.

    A degree is admissible when ``n >= oversampling * card A^{d,p}``.
    """
    if p_min > p_max:
        raise ArgumentError("p_min must not exceed p_max")
    model = design.model
    d = model.dim
    if family is None:
        families = default_families(model)
    elif isinstance(family, PolynomialFamily):
        families = (family,) * d
    else:
        families = tuple(family)
    trace = []
    best = None
    for p in range(p_min, p_max + 1):
        if design.n < oversampling * math.comb(d + p, p):
            break
        basis = MultivariateBasis(families, enumerate_total_degree(d, p))
        try:
            cand = fit(design, responses, basis)
        except IllPosedFitError as exc:
            trace.append({"p": p, "loo_error": None, "error": str(exc)})
            continue
        trace.append({"p": p, "loo_error": cand.loo_error})
        if best is None or cand.loo_error < best.loo_error:
            best = cand
    if best is None:
        need = oversampling * math.comb(d + p_min, p_min)
        raise UnderdeterminedError(
            f"no admissible degree in [{p_min}, {p_max}]: n={design.n} < {need:g}"
        )
    best.metadata["selection"] = trace
    best.metadata["selected_degree"] = best.degree
    return best


def moments(model: PceModel):
    """(mean, variance) of the expansion."""
    zero = model.basis.index_set.total_degrees() == 0
    c = model.coefficients
    return float(c[zero].sum()), float(np.sum(c[~zero] ** 2))


def _partial_variances(model: PceModel):
    idx = model.basis.index_set.indices
    c2 = model.coefficients**2
    active = idx > 0
    nonzero = active.any(axis=1)
    total = float(c2[nonzero].sum())
    if not total > 0:
        raise DegenerateModelError("the expansion has zero variance")
    return active, c2, total


def sobol_indices(model: PceModel, request="first_order") -> SobolReport:
    """Analytic Sobol' indices from squared coefficients.

    ``request`` is ``"first_order"``, ``"total"``, ``"all"`` (every subset
    carried by the basis) or an explicit subset (iterable of 0-based
    variable indices), or a list of such subsets.
    """
    active, c2, total = _partial_variances(model)
    d = model.basis.d
    names = model.input_model.names
    report = SobolReport(names)

    def add(subset, kind, value):
        report.add(SobolEntry(tuple(subset), kind, value, "pce_analytic", flag=range_flag(value)))

    def closed(subset):
        mask = np.zeros(d, dtype=bool)
        mask[list(subset)] = True
        rows = np.all(active == mask, axis=1)
        return float(c2[rows].sum()) / total

    if isinstance(request, str):
        if request in ("first_order", "first"):
            for i in range(d):
                add((i,), "first", closed((i,)))
        elif request == "total":
            for i in range(d):
                add((i,), "total", float(c2[active[:, i]].sum()) / total)
        elif request == "all":
            seen = {}
            for row, v in zip(active, c2):
                key = tuple(np.flatnonzero(row))
                if key:
                    seen[key] = seen.get(key, 0.0) + v
            for key in sorted(seen, key=lambda s: (len(s), s)):
                add(key, "first" if len(key) == 1 else "subset", seen[key] / total)
        else:
            raise ArgumentError(f"unknown Sobol' request {request!r}")
        return report
    subsets = list(request)
    if subsets and np.isscalar(subsets[0]):
        subsets = [subsets]
    for s in subsets:
        s = tuple(sorted(int(i) for i in s))
        if not s or min(s) < 0 or max(s) >= d:
            raise ArgumentError(f"invalid subset {s}")
        add(s, "first" if len(s) == 1 else "subset", closed(s))
    return report


def all_subsets(d: int):
    for k in range(1, d + 1):
        yield from combinations(range(d), k)
