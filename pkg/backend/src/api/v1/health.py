"""Health check endpoint: /api/v1/health."""

from __future__ import annotations

from fastapi import APIRouter, Depends

from backend.src.api.deps import get_config
from backend.src.config import AppConfig
from backend.src.models.schemas import HealthResponse


router = APIRouter(prefix="/api/v1", tags=["health"])


@router.get("/health")
def health_check(cfg: AppConfig = Depends(get_config)) -> HealthResponse:
    return HealthResponse(status="ok", lp_method=cfg.lp_method, qp_solver=cfg.qp_solver)
