"""Shared test fixtures — small instances, random instances, TestClient."""

from __future__ import annotations

import os
from collections.abc import Sequence

import numpy as np
import pytest
from fastapi.testclient import TestClient


# Keep test runs from writing rotating log files into the repo.
os.environ.setdefault("STORAGE_PLAN_LOG_TO_FILE", "false")

from backend.src.models.domain import (  # noqa: E402
    GeneratorSpec,
    StorageSpec,
    SystemInstance,
    TimeGrid,
)


# ---------------------------------------------------------------------------
# Instance builders
# ---------------------------------------------------------------------------
def make_instance(
    demand: Sequence[float],
    generators: Sequence[tuple[str, float | Sequence[float], float, Sequence[float] | None]],
    door_cost: float,
    room_cost: float,
    cyclic: bool = True,
) -> SystemInstance:
    """Instance from (name, var_cost, cap_cost, availability-or-None) tuples."""
    n = len(demand)
    gens = tuple(
        GeneratorSpec(
            name=name,
            var_cost=np.broadcast_to(np.asarray(var_cost, dtype=float), (n,)),
            cap_cost=cap_cost,
            availability=np.ones(n) if avail is None else np.asarray(avail, dtype=float),
        )
        for name, var_cost, cap_cost, avail in generators
    )
    return SystemInstance(
        grid=TimeGrid(n_hours=n, cyclic=cyclic),
        demand=np.asarray(demand, dtype=float),
        generators=gens,
        storage=StorageSpec(door_cost=door_cost, room_cost=room_cost),
    )


def random_instance(
    rng: np.random.Generator, n: int, cyclic: bool = True, cheap_storage: bool = True
) -> SystemInstance:
    """Feasible three-generator instance: baseload, peaker and a variable renewable."""
    hod = np.arange(n) % 24
    demand = 5.0 + 3.0 * np.sin(2 * np.pi * hod / 24) + rng.uniform(0.0, 2.0, n)
    solar = np.clip(np.sin(np.pi * (hod - 6) / 12), 0.0, None) * rng.uniform(0.5, 1.0, n)
    gens = [
        ("baseload", rng.uniform(1.0, 3.0), rng.uniform(8.0, 12.0) * n / 24, None),
        ("peaker", rng.uniform(8.0, 12.0), rng.uniform(1.0, 3.0) * n / 24, None),
        ("solar", 0.0, rng.uniform(2.0, 4.0) * n / 24, solar),
    ]
    door, room = (0.5, 0.2) if cheap_storage else (50.0, 20.0)
    return make_instance(demand, gens, door * n / 24, room * n / 24, cyclic=cyclic)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------
@pytest.fixture()
def peak_only_instance() -> SystemInstance:
    """One generator, two hours, storage priced out."""
    return make_instance([1.0, 2.0], [("gen", 1.0, 10.0, [1.0, 1.0])], 1e6, 1e6)


@pytest.fixture()
def storage_instance() -> SystemInstance:
    """Baseload vs peaker over a 1-4-1-4 load with cheap storage."""
    return make_instance(
        [1.0, 4.0, 1.0, 4.0],
        [("baseload", 1.0, 5.0, None), ("peaker", 10.0, 1.0, None)],
        door_cost=0.5,
        room_cost=0.5,
    )


@pytest.fixture()
def day_instance() -> SystemInstance:
    """48 hours with a solar resource and storage worth building."""
    return random_instance(np.random.default_rng(7), 48)


@pytest.fixture()
def client() -> TestClient:
    from backend.src.main import app

    return TestClient(app)
