"""Surrogate-based (PCE and Gaussian process) Sobol' sensitivity analysis."""

__version__ = "0.1.0"
