"""Solve endpoint — /api/v1/solve."""

from __future__ import annotations

from typing import Any

from fastapi import APIRouter

from backend.src.api.deps import get_lp_solver
from backend.src.api.errors import http_error
from backend.src.models.schemas import SolveRequest
from backend.src.processors.model_core import audit_kkt, solve_core
from backend.src.utils.errors import StoragePlanError


router = APIRouter(prefix="/api/v1", tags=["solve"])


@router.post("/solve")
def solve(req: SolveRequest) -> dict[str, Any]:
    try:
        instance = req.instance.to_instance()
        result = solve_core(instance, solver=get_lp_solver(req.backend))
        kkt = audit_kkt(instance, result)
    except StoragePlanError as e:
        raise http_error(e) from e
    return {
        "objective": result.objective,
        "capacity": dict(zip(instance.generator_names, result.z.tolist(), strict=True)),
        "storage_door": result.t,
        "storage_room": result.u,
        "r": result.r.tolist(),
        "s": result.s.tolist(),
        "lambda": result.lambda_.tolist(),
        "omega": result.omega.tolist(),
        "solve_seconds": result.solve_seconds,
        "kkt": {
            "ok": kkt.ok,
            "max_violation": kkt.max_violation,
            "conditions": sorted(kkt.conditions()),
        },
    }
