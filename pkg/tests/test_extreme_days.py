"""Tests for cumulative days and extreme-vertex day covers."""

from __future__ import annotations

import itertools

import numpy as np
import pandas as pd
import pytest

from backend.src.processors.extreme_days import (
    CumulativeDayset,
    cumulative_days,
    select_extreme_days,
)
from backend.src.services.synthetic_service import generate_regional_series
from backend.src.utils.errors import IndivisibleHorizon, InvalidParameter


@pytest.fixture(scope="module")
def regional_days() -> CumulativeDayset:
    return cumulative_days(generate_regional_series("seasonal", 24 * 60, regions=3, seed=1))


def _assert_covered(cds: CumulativeDayset, cover) -> None:
    for i, vertex in enumerate(cover.vertices):
        cols = cds.region_columns(vertex.region)
        day = cover.assignment[i]
        assert day in cover.chosen_days
        dist = np.linalg.norm(cds.days[day, cols] - np.asarray(vertex.corner, dtype=float))
        assert dist <= max(cover.radius, vertex.nearest_distance) + 1e-9


def test_cumulative_days_shape(regional_days: CumulativeDayset) -> None:
    assert regional_days.n_days == 60
    assert regional_days.regions == ["R01", "R02", "R03"]
    assert len(regional_days.region_columns("R02")) == 3
    assert regional_days.days.min() >= 0.0
    assert regional_days.days.max() <= 1.0
    assert regional_days.to_frame().shape == (60, 9)


def test_flat_columns_are_one_region() -> None:
    frame = pd.DataFrame({"load": np.arange(48.0), "wind": np.ones(48)})
    cds = cumulative_days(frame)
    assert cds.regions == ["system"]
    assert cds.n_days == 2


def test_partial_day_rejected() -> None:
    with pytest.raises(IndivisibleHorizon):
        cumulative_days(pd.DataFrame({"load": np.ones(30)}))


@pytest.mark.parametrize("radius", [0.05, 0.2, 0.5, 1.0])
def test_greedy_covers_every_vertex(regional_days: CumulativeDayset, radius: float) -> None:
    cover = select_extreme_days(regional_days, radius)
    assert len(cover.vertices) == 3 * 2**3
    _assert_covered(regional_days, cover)


def test_small_radius_flags_uncoverable(regional_days: CumulativeDayset) -> None:
    cover = select_extreme_days(regional_days, 1e-6)
    assert cover.uncoverable
    _assert_covered(regional_days, cover)
    frame = cover.assignment_frame()
    assert frame["uncoverable"].sum() == len(cover.uncoverable)


def test_huge_radius_needs_one_day(regional_days: CumulativeDayset) -> None:
    for method in ("greedy", "exact"):
        cover = select_extreme_days(regional_days, 10.0, method=method)
        assert cover.n_chosen == 1
        assert not cover.uncoverable


def test_exact_is_no_larger_than_greedy(regional_days: CumulativeDayset) -> None:
    for radius in (0.2, 0.4):
        greedy = select_extreme_days(regional_days, radius)
        exact = select_extreme_days(regional_days, radius, method="exact")
        _assert_covered(regional_days, exact)
        assert exact.n_chosen <= greedy.n_chosen


@pytest.mark.parametrize("method", ["greedy", "exact"])
def test_count_shrinks_with_radius(regional_days: CumulativeDayset, method: str) -> None:
    radii = (0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.6, 0.8, 1.6)
    counts = [select_extreme_days(regional_days, r, method=method).n_chosen for r in radii]
    assert counts == sorted(counts, reverse=True)


@pytest.mark.parametrize("method", ["greedy", "exact"])
def test_count_grows_with_regions(regional_days: CumulativeDayset, method: str) -> None:
    regions = regional_days.regions
    counts = [
        select_extreme_days(regional_days.subset(regions[:k]), 0.3, method=method).n_chosen
        for k in (1, 2, 3)
    ]
    assert counts == sorted(counts)


@pytest.mark.parametrize("method", ["greedy", "exact"])
def test_identical_days_need_one_day(method: str) -> None:
    flat = pd.DataFrame({"load": np.ones(240), "wind": np.ones(240), "solar": np.ones(240)})
    cds = cumulative_days(flat)
    np.testing.assert_array_equal(cds.days, 0.5)
    cover = select_extreme_days(cds, 0.1, method=method)
    assert cover.chosen_days == [0]
    assert len(cover.uncoverable) == 8


@pytest.mark.parametrize("method", ["greedy", "exact"])
def test_corner_days_are_all_chosen(method: str) -> None:
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=3)))
    columns = (("system", "load"), ("system", "wind"), ("system", "solar"))
    cds = CumulativeDayset(days=corners, columns=columns)
    cover = select_extreme_days(cds, 0.1, method=method)
    assert cover.chosen_days == list(range(8))
    assert not cover.uncoverable
    for i, vertex in enumerate(cover.vertices):
        assert cover.assignment[i] == vertex.nearest_day


def test_scatter_frame_marks_chosen_days(regional_days: CumulativeDayset) -> None:
    cover = select_extreme_days(regional_days, 0.4)
    frame = cover.scatter_frame(regional_days)
    assert len(frame) == 60
    assert sorted(frame.loc[frame["chosen"], "day"]) == cover.chosen_days


def test_invalid_arguments(regional_days: CumulativeDayset) -> None:
    with pytest.raises(InvalidParameter):
        select_extreme_days(regional_days, 0.0)
    with pytest.raises(InvalidParameter):
        select_extreme_days(regional_days, 0.3, method="random")
