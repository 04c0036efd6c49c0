"""Tests for /api/v1/solve endpoint."""

from __future__ import annotations

import json
from typing import Any

import pytest
from fastapi.testclient import TestClient

from backend.src.config import INSTANCES_DIR


def _instance(name: str = "two_hour.json") -> dict[str, Any]:
    return json.loads((INSTANCES_DIR / name).read_text())


def test_v1_solve(client: TestClient) -> None:
    r = client.post("/api/v1/solve", json={"instance": _instance()})
    assert r.status_code == 200
    data = r.json()
    assert data["objective"] == pytest.approx(23.0)
    assert data["capacity"] == {"gen": pytest.approx(2.0)}
    assert data["kkt"]["ok"] is True
    assert data["kkt"]["conditions"] == []
    assert len(data["lambda"]) == 2


def test_v1_solve_cvxpy_backend(client: TestClient) -> None:
    r = client.post(
        "/api/v1/solve", json={"instance": _instance("two_gen_storage.json"), "backend": "cvxpy"}
    )
    assert r.status_code == 200
    assert r.json()["objective"] == pytest.approx(24.0, rel=1e-5)


def test_v1_solve_rejects_bad_dimensions(client: TestClient) -> None:
    doc = _instance()
    doc["demand"] = [1.0]
    r = client.post("/api/v1/solve", json={"instance": doc})
    assert r.status_code == 400
    assert "DimensionMismatch" in r.json()["detail"]


def test_v1_solve_infeasible_is_conflict(client: TestClient) -> None:
    doc = _instance()
    doc["generators"][0]["availability"] = [0.0, 0.0]
    doc["storage"] = {"door_cost": 1.0, "room_cost": 1.0}
    r = client.post("/api/v1/solve", json={"instance": doc})
    assert r.status_code == 409
    assert "InfeasibleError" in r.json()["detail"]


def test_v1_solve_schema_error(client: TestClient) -> None:
    r = client.post("/api/v1/solve", json={"instance": {"hours": 2}})
    assert r.status_code == 422
