"""Exception hierarchy.

Every error carries a short machine-readable ``category`` string which the
CLI reports on failure together with a distinct exit code.
"""

from __future__ import annotations


class MetasensError(Exception):
    category = "error"
    exit_code = 1


class ArgumentError(MetasensError, ValueError):
    category = "argument"
    exit_code = 2


class DomainError(MetasensError, ValueError):
    category = "domain"
    exit_code = 3


class ResourceError(MetasensError):
    category = "resource"
    exit_code = 4


class UnderdeterminedError(MetasensError):
    category = "underdetermined"
    exit_code = 5


class IllPosedFitError(MetasensError):
    category = "ill_posed_fit"
    exit_code = 5

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class DegenerateLOOError(MetasensError):
    category = "degenerate_loo"
    exit_code = 6


class DegenerateModelError(MetasensError):
    category = "degenerate_model"
    exit_code = 6


class IllConditioningError(MetasensError):
    category = "ill_conditioning"
    exit_code = 7


class TrendError(MetasensError):
    category = "trend"
    exit_code = 7


class NumericalBreakdownError(MetasensError):
    category = "numerical_breakdown"
    exit_code = 8


class MechanismError(MetasensError):
    category = "mechanism"
    exit_code = 9


class ExperimentError(MetasensError):
    category = "experiment"
    exit_code = 10
