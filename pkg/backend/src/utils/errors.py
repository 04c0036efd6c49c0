"""Exception hierarchy shared by the solvers, aggregations and services."""

from __future__ import annotations

from typing import Any


class StoragePlanError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# Input errors
# ---------------------------------------------------------------------------
class InvalidInstance(StoragePlanError, ValueError):
    """A SystemInstance (or its document) violates its invariants."""


class DimensionMismatch(StoragePlanError, ValueError):
    """Vectors or matrices do not agree with the time grid they belong to."""


class IndivisibleHorizon(StoragePlanError, ValueError):
    """The horizon is not a whole number of days (or ADMM chunks)."""


class KTooLarge(StoragePlanError, ValueError):
    """More clusters/states requested than the data can provide."""


class InvalidParameter(StoragePlanError, ValueError):
    """An option value outside its allowed set (linkage, selection, partition, ...)."""


class EmptyClusterError(StoragePlanError):
    """Clustering kept producing empty clusters after every re-seed."""


# ---------------------------------------------------------------------------
# Solver errors
# ---------------------------------------------------------------------------
class SolverError(StoragePlanError):
    """An optimization did not return an optimal point."""


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


class NumericalFailure(SolverError):
    pass


class MaxItersExceeded(SolverError):
    """ADMM stopped at its iteration cap; the best iterate travels with it."""

    def __init__(self, message: str, result: Any = None, trace: Any = None) -> None:
        super().__init__(message)
        self.result = result
        self.trace = trace


# ---------------------------------------------------------------------------
# Valuation errors
# ---------------------------------------------------------------------------
class ValuationError(StoragePlanError):
    pass


class NotOptimalError(ValuationError):
    """The SolveResult fails its KKT audit."""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class IdentityViolation(ValuationError):
    """A marginal-value identity does not hold on the returned duals."""

    def __init__(self, message: str, checks: Any = None) -> None:
        super().__init__(message)
        self.checks = checks


class NotCyclicError(ValuationError):
    """Cycle decomposition needs a cyclic storage boundary."""
