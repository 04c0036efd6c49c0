"""Method comparison endpoint — /api/v1/compare."""

from __future__ import annotations

from typing import Any

from fastapi import APIRouter

from backend.src.api.errors import http_error
from backend.src.models.schemas import CompareRequest
from backend.src.services.comparison_service import Scenario, run_comparison
from backend.src.services.instance_service import resolve_instance
from backend.src.utils.errors import StoragePlanError


router = APIRouter(prefix="/api/v1", tags=["compare"])


@router.post("/compare")
def compare(req: CompareRequest) -> dict[str, Any]:
    doc = req.scenario
    try:
        scenario = Scenario.from_document(doc, resolve_instance(doc))
        report = run_comparison(scenario)
    except StoragePlanError as e:
        raise http_error(e) from e
    return report.to_dict()
