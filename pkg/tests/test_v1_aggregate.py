"""Tests for /api/v1/aggregate endpoint."""

from __future__ import annotations

import json
from typing import Any

from fastapi.testclient import TestClient

from backend.src.config import INSTANCES_DIR


def _instance() -> dict[str, Any]:
    return json.loads((INSTANCES_DIR / "two_gen_storage.json").read_text())


def test_v1_aggregate_system_states(client: TestClient) -> None:
    body = {"instance": _instance(), "method": {"kind": "system-states", "k": 2}}
    r = client.post("/api/v1/aggregate", json=body)
    assert r.status_code == 200
    data = r.json()
    assert data["aggregation"]["P"] == [[0.0, 1.0], [1.0, 0.0]]
    assert data["aggregation"]["w"] == [2.0, 2.0]
    assert data["lossless"]["lossless"] is True


def test_v1_aggregate_reports_violations(client: TestClient) -> None:
    body = {"instance": _instance(), "method": {"kind": "adjacent", "k": 1}}
    data = client.post("/api/v1/aggregate", json=body).json()
    assert data["lossless"]["lossless"] is False
    assert {v["condition"] for v in data["lossless"]["violations"]} >= {1}


def test_v1_aggregate_rejects_full(client: TestClient) -> None:
    r = client.post("/api/v1/aggregate", json={"instance": _instance(), "method": {"kind": "full"}})
    assert r.status_code == 422


def test_v1_aggregate_bad_k(client: TestClient) -> None:
    body = {"instance": _instance(), "method": {"kind": "system-states", "k": 3}}
    r = client.post("/api/v1/aggregate", json=body)
    assert r.status_code == 400
    assert "KTooLarge" in r.json()["detail"]
