"""Tests for /api/v1/compare endpoint."""

from __future__ import annotations

from fastapi.testclient import TestClient


def test_v1_compare(client: TestClient) -> None:
    scenario = {
        "name": "api",
        "instance": {"synthetic": {"profile": "iid", "hours": 24, "seed": 3}},
        "methods": [{"kind": "full"}, {"kind": "system-states", "k": 2}],
        "sweep": [0.5, 1.0],
    }
    r = client.post("/api/v1/compare", json={"scenario": scenario})
    assert r.status_code == 200
    data = r.json()
    assert data["baseline"] == "full"
    assert [row["label"] for row in data["rows"]] == ["full", "system-states(2)"]
    assert len(data["sweep"]) == 4


def test_v1_compare_unknown_profile(client: TestClient) -> None:
    scenario = {"instance": {"synthetic": {"profile": "sunny", "hours": 24}}, "methods": []}
    r = client.post("/api/v1/compare", json={"scenario": scenario})
    assert r.status_code == 422


def test_v1_compare_admm_block_and_eps_aliases(client: TestClient) -> None:
    scenario = {
        "name": "api-admm",
        "instance": {"synthetic": {"profile": "iid", "hours": 24, "seed": 3}},
        "methods": [{"kind": "admm", "admm": {"blocks": "hour", "eps": 1e-12, "max_iters": 2}}],
    }
    r = client.post("/api/v1/compare", json={"scenario": scenario})
    assert r.status_code == 200
    (row,) = r.json()["rows"]
    assert row["label"] == "admm(hour)"
    assert row["error"] is None
    assert "max_iters" in row["flags"]
