"""Gaussian-process (universal kriging) surrogates."""

from .kernels import Kernel, kernel_eval
from .model import GpModel, fit
from .sampling import lowrank_residual, next_design_point, sample_posterior, update_realization
from .trend import TrendSpec, ishigami_trend

__all__ = [
    "GpModel",
    "Kernel",
    "TrendSpec",
    "fit",
    "ishigami_trend",
    "kernel_eval",
    "lowrank_residual",
    "next_design_point",
    "sample_posterior",
    "update_realization",
]
