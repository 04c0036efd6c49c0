"""Tests for the aggregated LP, its expansion to hours and the state-level room identity."""

from __future__ import annotations

import numpy as np
import pytest

from backend.src.models.domain import SystemInstance
from backend.src.processors.agg_model import (
    aggregated_room_identity,
    expand_solution,
    room_identity_residual,
    solve_aggregated,
)
from backend.src.processors.aggregation import (
    aggregate_identity,
    representative_days,
    system_states,
)
from backend.src.processors.model_core import solve_core
from backend.src.utils.errors import DimensionMismatch
from tests.conftest import random_instance


def test_expanded_shapes(day_instance: SystemInstance) -> None:
    agg = system_states(day_instance, 4)
    res = expand_solution(solve_aggregated(day_instance, agg), agg)
    n, G = day_instance.n_hours, day_instance.n_generators
    assert res.x.shape == (G, n)
    assert res.rho.shape == (G, n)
    for name in ("r", "s", "lambda_", "omega", "delta_c", "delta_d", "tau"):
        assert getattr(res, name).shape == (n,)
    assert res.meta["states"] == 4


def test_expanded_prices_are_per_hour(day_instance: SystemInstance) -> None:
    agg = system_states(day_instance, 3)
    agg_res = solve_aggregated(day_instance, agg)
    res = expand_solution(agg_res, agg)
    for s in range(3):
        hours = np.flatnonzero(agg.gamma == s)
        np.testing.assert_allclose(res.lambda_[hours], agg_res.lambda_[s] / agg.w[s])
    # tau is spread over run ends without changing its total
    assert res.tau.sum() == pytest.approx(agg_res.tau.sum())


def test_identity_expansion_keeps_state_of_charge(day_instance: SystemInstance) -> None:
    agg = aggregate_identity(day_instance.grid, day_instance)
    agg_res = solve_aggregated(day_instance, agg)
    res = expand_solution(agg_res, agg)
    np.testing.assert_allclose(res.s, agg_res.s, atol=1e-8)
    np.testing.assert_allclose(res.omega, agg_res.omega)


def test_non_cyclic_expansion_accumulates_from_empty() -> None:
    inst = random_instance(np.random.default_rng(9), 48, cyclic=False)
    agg = aggregate_identity(inst.grid, inst)
    res = expand_solution(solve_aggregated(inst, agg), agg)
    np.testing.assert_allclose(res.s, np.cumsum(res.r), atol=1e-8)
    assert res.meta["cyclic"] is False
    assert res.objective == pytest.approx(solve_core(inst).objective)


@pytest.mark.parametrize("seed", range(4))
def test_aggregated_room_identity_holds(seed: int) -> None:
    inst = random_instance(np.random.default_rng(40 + seed), 96)
    agg = system_states(inst, 6)
    agg_res = solve_aggregated(inst, agg)
    check = aggregated_room_identity(agg_res, agg, inst)
    if check.asserted:
        assert check.holds, check
    assert room_identity_residual(agg_res, agg, inst) == check.residual


def test_rep_day_room_identity(day_instance: SystemInstance) -> None:
    agg = representative_days(day_instance, 1)
    agg_res = solve_aggregated(day_instance, agg)
    assert aggregated_room_identity(agg_res, agg, day_instance).holds


def test_mismatched_horizon_rejected(day_instance: SystemInstance) -> None:
    other = random_instance(np.random.default_rng(1), 24)
    agg = aggregate_identity(other.grid, other)
    with pytest.raises(DimensionMismatch):
        solve_aggregated(day_instance, agg)
