"""Aggregation endpoint — /api/v1/aggregate."""

from __future__ import annotations

from typing import Any

from fastapi import APIRouter, HTTPException

from backend.src.api.errors import http_error
from backend.src.models.schemas import AggregateRequest, AggregationDocument
from backend.src.processors.aggregation import check_lossless
from backend.src.services.comparison_service import build_aggregation
from backend.src.utils.errors import StoragePlanError


router = APIRouter(prefix="/api/v1", tags=["aggregate"])


@router.post("/aggregate")
def aggregate(req: AggregateRequest) -> dict[str, Any]:
    if req.method.kind in ("full", "admm"):
        raise HTTPException(status_code=422, detail=f"{req.method.kind!r} is not an aggregation")
    try:
        instance = req.instance.to_instance()
        agg = build_aggregation(instance, req.method)
        report = check_lossless(agg, instance, tol=req.method.tol)
    except StoragePlanError as e:
        raise http_error(e) from e
    return {
        "aggregation": AggregationDocument.from_aggregation(agg, instance.generator_names),
        "lossless": report.to_dict(),
    }
