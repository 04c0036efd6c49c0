"""Storage valuation endpoint — /api/v1/valuation."""

from __future__ import annotations

from typing import Any

from fastapi import APIRouter

from backend.src.api.errors import http_error
from backend.src.models.schemas import ValuationRequest
from backend.src.processors.model_core import solve_core
from backend.src.processors.valuation import value_report
from backend.src.utils.errors import StoragePlanError


router = APIRouter(prefix="/api/v1", tags=["valuation"])


@router.post("/valuation")
def valuation(req: ValuationRequest) -> dict[str, Any]:
    try:
        instance = req.instance.to_instance()
        report = value_report(solve_core(instance), instance)
    except StoragePlanError as e:
        raise http_error(e) from e
    return report.to_dict()
