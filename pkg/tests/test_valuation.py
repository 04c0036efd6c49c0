"""Tests for the dual-based storage valuation."""

from __future__ import annotations

from unittest.mock import patch

import numpy as np
import pytest

from backend.src.models.domain import SystemInstance
from backend.src.processors.model_core import solve_core
from backend.src.processors.valuation import (
    cycle_decomposition,
    energy_capacity_split,
    identity_tolerance,
    marginal_values,
    omega_price_relation,
    scarcity_premium,
    value_report,
)
from backend.src.utils.errors import IdentityViolation, NotCyclicError, NotOptimalError
from tests.conftest import make_instance, random_instance


@pytest.mark.parametrize("seed", range(10))
def test_identities_hold_on_random_instances(seed: int) -> None:
    inst = random_instance(np.random.default_rng(200 + seed), 72)
    res = solve_core(inst)
    report = value_report(res, inst)
    assert report.storage_room > 0
    for check in report.checks:
        assert check.holds, check
    assert report.room_rent_sum == pytest.approx(inst.storage.room_cost, rel=1e-5)
    assert report.omega_pos_diff_sum == pytest.approx(inst.storage.room_cost, rel=1e-5)
    if report.storage_door > 1e-6:
        assert report.door_rent_sum == pytest.approx(inst.storage.door_cost, rel=1e-5)


def test_cycles_sum_to_room_cost(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance)
    decomposition = cycle_decomposition(res, room_cost=day_instance.storage.room_cost)
    assert decomposition.cycles
    assert all(c.monotone for c in decomposition.cycles)
    assert decomposition.total == pytest.approx(day_instance.storage.room_cost, rel=1e-5)


def test_wrong_room_cost_is_an_identity_violation(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance)
    with pytest.raises(IdentityViolation):
        cycle_decomposition(res, room_cost=day_instance.storage.room_cost + 1.0)


def test_split_adds_up_to_storage_profit(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance)
    split = energy_capacity_split(res, day_instance)
    assert split.energy_value + split.capacity_value == pytest.approx(
        float(-(res.r @ res.lambda_)), rel=1e-8, abs=1e-8
    )
    np.testing.assert_allclose(split.lambda_star + split.scarcity_premium, res.lambda_)


def test_no_scarcity_means_no_capacity_value() -> None:
    price = np.tile([1.0, 5.0], 12)
    inst = make_instance(np.full(24, 10.0), [("market", price, 0.0, None)], 0.5, 0.5)
    res = solve_core(inst)
    assert res.t > 0
    gamma, _ = scarcity_premium(res, inst)
    np.testing.assert_allclose(gamma, 0.0, atol=1e-7)
    split = energy_capacity_split(res, inst)
    assert split.capacity_value == pytest.approx(0.0, abs=1e-6)
    assert split.energy_value > 0


def test_omega_tracks_price_where_storage_moves(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance)
    records = omega_price_relation(res, day_instance)
    active = [rec for rec in records if rec.active]
    assert active
    assert max(rec.residual for rec in active) < 1e-6


def test_storage_not_built(peak_only_instance: SystemInstance) -> None:
    res = solve_core(peak_only_instance)
    report = value_report(res, peak_only_instance)
    assert report.storage_room == pytest.approx(0.0, abs=1e-9)
    assert not any(c.asserted for c in report.checks)
    assert report.cycles == []
    assert report.energy_value_per_door == 0.0


def test_non_optimal_result_rejected(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance).copy()
    res.s = res.s + 1.0
    with pytest.raises(NotOptimalError) as exc:
        marginal_values(res, day_instance)
    assert exc.value.report is not None
    # unchecked reports still come back for inspection
    assert marginal_values(res, day_instance, check=False).storage_room == res.u


def test_non_cyclic_results() -> None:
    inst = random_instance(np.random.default_rng(11), 48, cyclic=False)
    res = solve_core(inst)
    with pytest.raises(NotCyclicError):
        cycle_decomposition(res)
    report = value_report(res, inst)
    assert "not_cyclic" in report.flags


def test_report_serializes(day_instance: SystemInstance) -> None:
    report = value_report(solve_core(day_instance), day_instance)
    data = report.to_dict()
    assert set(data["checks"][0]) >= {"name", "lhs", "rhs", "residual", "holds"}
    assert len(data["scarcity_premium"]) == day_instance.n_hours


def test_full_horizon_cycle_is_reported_but_not_asserted(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance).copy()
    res.s = res.s + 1.0  # storage never empties
    wrong = day_instance.storage.room_cost + 1.0
    decomposition = cycle_decomposition(res, room_cost=wrong)
    assert decomposition.no_zero_soc
    assert len(decomposition.cycles) == 1
    assert decomposition.identity is not None
    assert decomposition.identity.asserted is False
    assert decomposition.identity.holds

    report = value_report(res, day_instance, check=False)
    assert "no_zero_soc" in report.flags
    cycle_sum = [c for c in report.checks if c.name == "cycle_sum"]
    assert len(cycle_sum) == 1
    assert cycle_sum[0].asserted is False


def test_split_cycles_assert_their_identity(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance)
    decomposition = cycle_decomposition(res, room_cost=day_instance.storage.room_cost)
    assert not decomposition.no_zero_soc
    assert decomposition.identity.asserted
    assert decomposition.identity.holds


def test_omega_relation_uses_instance_tolerance(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance).copy()
    tol = identity_tolerance(day_instance)
    hour = next(rec.hour for rec in omega_price_relation(res, day_instance) if rec.active)
    res.omega = res.omega.copy()
    with patch("backend.src.processors.valuation._require_optimal"):
        res.omega[hour] += 0.5 * tol
        omega_price_relation(res, day_instance)
        res.omega[hour] += tol
        with pytest.raises(IdentityViolation):
            omega_price_relation(res, day_instance)


def test_value_report_checks_omega_against_its_instance(day_instance: SystemInstance) -> None:
    res = solve_core(day_instance)
    with patch(
        "backend.src.processors.valuation.omega_price_relation", wraps=omega_price_relation
    ) as relation:
        value_report(res, day_instance)
    relation.assert_called_once_with(res, instance=day_instance, check=True)
