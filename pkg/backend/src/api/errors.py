"""Map library exceptions onto HTTP errors."""

from __future__ import annotations

from fastapi import HTTPException

from backend.src.utils.errors import SolverError, StoragePlanError, ValuationError


def http_error(exc: StoragePlanError) -> HTTPException:
    if isinstance(exc, (SolverError, ValuationError)):
        return HTTPException(status_code=409, detail=f"{type(exc).__name__}: {exc}")
    return HTTPException(status_code=400, detail=f"{type(exc).__name__}: {exc}")
