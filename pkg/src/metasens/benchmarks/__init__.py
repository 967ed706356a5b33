"""Benchmark models with their input laws and reference Sobol' indices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..distributions import Gumbel, InputModel, Lognormal, Uniform
from ..errors import ArgumentError
from ..report import SobolEntry, SobolReport
from .functions import (
    G_SOBOL_A,
    g_sobol,
    g_sobol_indices,
    ishigami,
    ishigami_indices,
    morris,
)
from .truss import NAMES as TRUSS_NAMES
from .truss import TrussSpec, default_truss, truss_deflection, truss_solve

__all__ = [
    "BenchmarkCase",
    "TrussSpec",
    "default_truss",
    "g_sobol",
    "g_sobol_indices",
    "get",
    "ishigami",
    "ishigami_indices",
    "morris",
    "names",
    "reference_indices",
    "truss_deflection",
    "truss_solve",
]


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    input_model: InputModel
    evaluator: Callable
    # first-order references: variable name -> (value, provenance)
    references: dict = field(default_factory=dict)
    fast_evaluator: Callable | None = None  # same values, used for large samples

    @property
    def d(self) -> int:
        return self.input_model.dim


def _ishigami():
    _, first, _ = ishigami_indices()
    model = InputModel([Uniform(-math.pi, math.pi)] * 3, ("x1", "x2", "x3"))
    refs = {n: (float(v), "analytic") for n, v in zip(model.names, first)}
    return BenchmarkCase("ishigami", model, ishigami, refs)


def _g_sobol():
    names = tuple(f"x{i + 1}" for i in range(len(G_SOBOL_A)))
    model = InputModel([Uniform(0.0, 1.0)] * len(G_SOBOL_A), names)
    _, _, S = g_sobol_indices()
    refs = {n: (float(v), "analytic") for n, v in zip(names, S)}
    return BenchmarkCase("g_sobol", model, g_sobol, refs)


# published large-sample Monte Carlo references
MORRIS_TABLE = {
    "x9": 0.150, "x8": 0.100, "x10": 0.100, "x7": 0.069, "x3": 0.008,
    "x1": 0.017, "x5": 0.016, "x2": 0.005, "x4": 0.009, "x6": 0.0,
}

TRUSS_TABLE = {
    "A1": 0.365, "E1": 0.365, "P3": 0.075, "P4": 0.074, "P5": 0.035,
    "P2": 0.035, "A2": 0.011, "E2": 0.011, "P6": 0.003, "P1": 0.002,
}


def _morris():
    names = tuple(f"x{i + 1}" for i in range(20))
    model = InputModel([Uniform(0.0, 1.0)] * 20, names)
    refs = {n: (v, "published_mc") for n, v in MORRIS_TABLE.items()}
    return BenchmarkCase("morris", model, morris, refs)


def truss_input_model() -> InputModel:
    return InputModel(
        [Lognormal(2.1e11, 2.1e10)] * 2
        + [Lognormal(2.0e-3, 2.0e-4), Lognormal(1.0e-3, 1.0e-4)]
        + [Gumbel(5.0e4, 7.5e3)] * 6,
        TRUSS_NAMES,
    )


def _truss():
    refs = {n: (v, "published_mc") for n, v in TRUSS_TABLE.items()}
    return BenchmarkCase(
        "truss",
        truss_input_model(),
        truss_deflection,
        refs,
        fast_evaluator=lambda x: truss_deflection(x, method="spectral"),
    )


_REGISTRY = {"ishigami": _ishigami, "g_sobol": _g_sobol, "morris": _morris, "truss": _truss}


def names():
    return tuple(_REGISTRY)


def get(name: str) -> BenchmarkCase:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ArgumentError(f"unknown benchmark {name!r}; choose from {', '.join(_REGISTRY)}") from None


def reference_indices(case, recompute: int | None = None, seed=0) -> SobolReport:
    """First-order reference indices of a benchmark.

    By default the stored values are returned (estimator ``analytic`` or
    ``published_mc``).  With ``recompute=N`` they are re-estimated by
    pick-freeze with N base samples on the true model.
    """
    from ..sobol import pick_freeze_indices

    if isinstance(case, str):
        case = get(case)
    if recompute:
        ev = case.fast_evaluator or case.evaluator
        return pick_freeze_indices(ev, case.input_model, None, int(recompute), seed)
    report = SobolReport(case.input_model.names)
    for i, name in enumerate(case.input_model.names):
        if name in case.references:
            value, tag = case.references[name]
            report.add(SobolEntry((i,), "first", value, tag))
    return report


def reference_vector(case) -> np.ndarray:
    """Stored first-order references in input order (NaN where none is given)."""
    return np.array([case.references.get(n, (math.nan, ""))[0] for n in case.input_model.names])
