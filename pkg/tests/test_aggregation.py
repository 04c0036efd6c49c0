"""Tests for the aggregation strategies and the lossless checks."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.src.models.domain import SystemInstance
from backend.src.processors.agg_model import expand_solution, solve_aggregated
from backend.src.processors.aggregation import (
    adjacent_clusters,
    aggregate_identity,
    check_lossless,
    compress_lossless,
    empirical_transition,
    lossless_feasibility_curve,
    representative_days,
    state_runs,
    system_states,
)
from backend.src.processors.model_core import audit_kkt, solve_core
from backend.src.services.synthetic_service import generate_synthetic
from backend.src.utils.errors import IndivisibleHorizon, InvalidParameter, KTooLarge
from tests.conftest import make_instance, random_instance


def _alternating_hours(n: int = 24) -> SystemInstance:
    demand = np.tile([1.0, 2.0], n // 2)
    return make_instance(
        demand, [("baseload", 1.0, 5.0, None), ("peaker", 10.0, 1.0, None)], 0.5, 0.5
    )


# ---------------------------------------------------------------------------
# Identity
# ---------------------------------------------------------------------------
@pytest.mark.parametrize(
    "seed,n",
    [(s, n) for n in (24, 48, 168) for s in range(7)],
)
def test_identity_matches_hourly_model(seed: int, n: int) -> None:
    inst = random_instance(np.random.default_rng(100 + seed), n, cyclic=seed % 3 != 0)
    agg = aggregate_identity(inst.grid, inst)
    full = solve_core(inst)
    agg_res = solve_aggregated(inst, agg)
    assert agg_res.objective == pytest.approx(full.objective, rel=1e-8, abs=1e-8)


def test_identity_without_instance_reads_hourly_data(day_instance: SystemInstance) -> None:
    agg = aggregate_identity(day_instance.grid)
    assert agg.profiles.availability.shape[0] == 0
    full = solve_core(day_instance)
    assert solve_aggregated(day_instance, agg).objective == pytest.approx(full.objective)


def test_identity_expansion_passes_audit(day_instance: SystemInstance) -> None:
    agg = aggregate_identity(day_instance.grid, day_instance)
    expanded = expand_solution(solve_aggregated(day_instance, agg), agg)
    assert audit_kkt(day_instance, expanded).ok
    assert check_lossless(agg, day_instance).lossless


# ---------------------------------------------------------------------------
# System states
# ---------------------------------------------------------------------------
def test_alternating_hours_give_two_state_swap() -> None:
    inst = _alternating_hours()
    agg = system_states(inst, 2)
    np.testing.assert_array_equal(agg.transition, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(agg.q, [1.0, 1.0])
    np.testing.assert_array_equal(agg.w, [12.0, 12.0])
    assert check_lossless(agg, inst).lossless
    full = solve_core(inst)
    assert solve_aggregated(inst, agg).objective == pytest.approx(full.objective, rel=1e-8)


def test_constant_system_collapses_to_one_state() -> None:
    inst = make_instance(np.full(48, 3.0), [("gen", 1.0, 2.0, None)], 1.0, 1.0)
    agg = system_states(inst, 1)
    np.testing.assert_array_equal(agg.transition, [[1.0]])
    assert agg.q[0] == 48
    assert agg.w[0] == 48
    assert check_lossless(agg, inst).lossless
    assert solve_aggregated(inst, agg).objective == pytest.approx(solve_core(inst).objective)


def test_system_states_rejects_too_many_states() -> None:
    inst = _alternating_hours()
    with pytest.raises(KTooLarge):
        system_states(inst, 3)


def test_empirical_transition_terminal_row() -> None:
    runs = np.array([0, 1, 0, 2])
    P = empirical_transition(runs, 3, cyclic=False)
    np.testing.assert_allclose(P[0], [0.0, 0.5, 0.5])
    np.testing.assert_allclose(P[2], [0.0, 0.0, 0.0])
    P_cyc = empirical_transition(runs, 3, cyclic=True)
    np.testing.assert_allclose(P_cyc[2], [1.0, 0.0, 0.0])


def test_empirical_transition_splits_by_run_counts() -> None:
    # state 0 hands over to state 1 once and to state 2 three times
    runs = np.array([0, 1, 0, 2, 0, 2, 0, 2])
    P = empirical_transition(runs, 3, cyclic=True)
    np.testing.assert_allclose(P[0], [0.0, 0.25, 0.75])
    np.testing.assert_allclose(P.sum(axis=1), 1.0)


def test_system_states_estimate_split_transition_row() -> None:
    demand = np.array([1.0, 5.0, 1.0, 9.0, 1.0, 9.0, 1.0, 9.0])
    inst = make_instance(demand, [("gen", 1.0, 2.0, None)], 1.0, 1.0)
    agg = system_states(inst, 3)
    np.testing.assert_array_equal(agg.gamma, [0, 1, 0, 2, 0, 2, 0, 2])
    np.testing.assert_allclose(agg.transition[0], [0.0, 0.25, 0.75])
    np.testing.assert_allclose(agg.transition[1:, 0], [1.0, 1.0])


def test_state_runs_merges_wrapping_run() -> None:
    states, starts, lengths = state_runs(np.array([0, 0, 1, 1, 0]), cyclic=True)
    np.testing.assert_array_equal(states, [0, 1])
    np.testing.assert_array_equal(starts, [4, 2])
    np.testing.assert_array_equal(lengths, [3, 2])


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 6), cyclic=st.booleans())
def test_system_states_invariants(seed: int, k: int, cyclic: bool) -> None:
    inst = random_instance(np.random.default_rng(seed), 48, cyclic=cyclic)
    agg = system_states(inst, k)
    assert agg.n_states == k
    assert agg.w.sum() == 48
    assert np.all(agg.q >= 1)
    sums = agg.transition.sum(axis=1)
    if cyclic:
        np.testing.assert_allclose(sums, 1.0)
    else:
        assert np.all((np.abs(sums - 1.0) < 1e-9) | (sums == 0.0))


# ---------------------------------------------------------------------------
# Representative days
# ---------------------------------------------------------------------------
def test_chained_rep_days_are_lossless_on_alternating_days() -> None:
    inst = generate_synthetic("alternating-days", 96, seed=4)
    chained = representative_days(inst, 2, linkage="chained")
    isolated = representative_days(inst, 2, linkage="isolated")
    assert chained.n_states == 48
    assert check_lossless(chained, inst).lossless
    report = check_lossless(isolated, inst)
    assert not report.lossless
    assert report.by_condition(2)
    assert not report.by_condition(1)

    full = solve_core(inst)
    chained_res = solve_aggregated(inst, chained)
    assert chained_res.objective == pytest.approx(full.objective, rel=1e-7)


def test_rep_days_cluster_sizes_weight_states() -> None:
    inst = generate_synthetic("alternating-days", 120, seed=1)
    agg = representative_days(inst, 2)
    assert sorted(agg.meta["cluster_sizes"]) == [2, 3]
    assert agg.w.sum() == 120
    np.testing.assert_array_equal(agg.q, 1.0)


def test_peak_median_selection() -> None:
    inst = generate_synthetic("peaky", 96, seed=0)
    agg = representative_days(inst, 2, selection="peak-median")
    reps = agg.meta["representative_days"]
    assert 2 in reps  # the scarcity day is the peak day
    with pytest.raises(InvalidParameter):
        representative_days(inst, 3, selection="peak-median")


def test_rep_days_input_errors() -> None:
    inst = random_instance(np.random.default_rng(0), 36)
    with pytest.raises(IndivisibleHorizon):
        representative_days(inst, 1)
    day = random_instance(np.random.default_rng(0), 48)
    with pytest.raises(KTooLarge):
        representative_days(day, 3)
    with pytest.raises(InvalidParameter):
        representative_days(day, 1, linkage="looped")


# ---------------------------------------------------------------------------
# Adjacent clusters, compression and the feasibility curve
# ---------------------------------------------------------------------------
def test_adjacent_clusters_are_contiguous(day_instance: SystemInstance) -> None:
    agg = adjacent_clusters(day_instance, 6)
    assert agg.n_states == 6
    assert np.all(np.diff(agg.gamma) >= 0)
    np.testing.assert_array_equal(agg.q, agg.w)


def test_compress_lossless_on_alternating_days() -> None:
    inst = generate_synthetic("alternating-days", 96, seed=2)
    agg = compress_lossless(inst)
    assert agg.n_states < inst.n_hours
    assert check_lossless(agg, inst).lossless
    full = solve_core(inst)
    assert solve_aggregated(inst, agg).objective == pytest.approx(full.objective, rel=1e-7)


def test_compress_lossless_keeps_every_hour_of_noise() -> None:
    inst = generate_synthetic("iid", 48, seed=5)
    agg = compress_lossless(inst)
    assert agg.n_states == inst.n_hours
    assert check_lossless(agg, inst).lossless


def test_lossless_check_detects_profile_spread(day_instance: SystemInstance) -> None:
    agg = adjacent_clusters(day_instance, 4)
    report = check_lossless(agg, day_instance)
    assert not report.lossless
    assert report.by_condition(1)
    assert report.to_dict()["lossless"] is False


def test_lossless_feasibility_curve(day_instance: SystemInstance) -> None:
    curve = lossless_feasibility_curve(day_instance, ks=[1, 8, 48])
    assert [p.k for p in curve.points] == [1, 8, 48]
    assert not curve.points[0].lossless
    assert curve.points[-1].lossless
    assert curve.first_lossless_k in (8, 48)


@pytest.mark.parametrize("cyclic", [True, False])
def test_adjacent_with_one_state_per_hour_is_identity(cyclic: bool) -> None:
    inst = random_instance(np.random.default_rng(3), 24, cyclic=cyclic)
    adjacent = adjacent_clusters(inst, inst.n_hours)
    identity = aggregate_identity(inst.grid, inst)
    np.testing.assert_array_equal(adjacent.gamma, identity.gamma)
    np.testing.assert_array_equal(adjacent.w, identity.w)
    np.testing.assert_array_equal(adjacent.q, identity.q)
    np.testing.assert_array_equal(adjacent.transition, identity.transition)
    np.testing.assert_allclose(adjacent.profiles.demand, identity.profiles.demand)
    assert solve_aggregated(inst, adjacent).objective == pytest.approx(
        solve_core(inst).objective, rel=1e-8
    )


# ---------------------------------------------------------------------------
# Lossless compression at scale
# ---------------------------------------------------------------------------
def _repeated_days(n_days: int) -> SystemInstance:
    hod = np.arange(24)
    day = 4.0 + 0.1 * hod + 2.0 * np.sin(2 * np.pi * hod / 24)
    solar = np.clip(np.sin(np.pi * (hod - 6) / 12), 0.0, None)
    gens = [
        ("baseload", 1.0, 8.0 * n_days, None),
        ("peaker", 10.0, 2.0 * n_days, None),
        ("solar", 0.0, 3.0 * n_days, np.tile(solar, n_days)),
    ]
    return make_instance(np.tile(day, n_days), gens, 0.5 * n_days, 0.2 * n_days)


def test_identical_days_compress_to_one_day_of_states() -> None:
    inst = _repeated_days(365)
    agg = compress_lossless(inst)
    assert agg.method == "lossless"
    assert agg.n_states == 24
    np.testing.assert_array_equal(agg.gamma, np.tile(np.arange(24), 365))
    np.testing.assert_array_equal(agg.w, np.full(24, 365.0))
    assert check_lossless(agg, inst, 0.0).lossless

    full = solve_core(inst)
    agg_res = solve_aggregated(inst, agg)
    assert agg_res.objective == pytest.approx(full.objective, rel=1e-8)
    assert audit_kkt(inst, expand_solution(agg_res, agg)).ok


def test_compressed_expansion_passes_audit() -> None:
    inst = generate_synthetic("alternating-days", 96, seed=2)
    agg = compress_lossless(inst)
    assert agg.method == "lossless"
    assert agg.n_states < inst.n_hours
    expanded = expand_solution(solve_aggregated(inst, agg), agg)
    report = audit_kkt(inst, expanded)
    assert report.ok, sorted(report.conditions())
    assert expanded.objective == pytest.approx(solve_core(inst).objective, rel=1e-8)


def test_diverse_year_needs_most_hours_to_be_lossless() -> None:
    inst = generate_synthetic("seasonal", 1440, regions=3, seed=0)
    n = inst.n_hours
    curve = lossless_feasibility_curve(inst, ks=[1, n // 8, n // 4, n // 2, n])
    assert [p.lossless for p in curve.points[:-1]] == [False] * 4
    assert curve.points[-1].lossless
    assert curve.first_lossless_k is not None
    assert curve.first_lossless_k > n / 2
