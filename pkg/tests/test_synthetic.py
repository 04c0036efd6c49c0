"""Tests for the synthetic instance generator."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from backend.src.services.synthetic_service import (
    extreme_day_index,
    generate_regional_series,
    generate_synthetic,
)
from backend.src.utils.constants import SYNTHETIC_PROFILES
from backend.src.utils.errors import IndivisibleHorizon, InvalidParameter


@pytest.mark.parametrize("profile", SYNTHETIC_PROFILES)
def test_profiles_are_valid_instances(profile: str) -> None:
    inst = generate_synthetic(profile, 72, seed=3)
    assert inst.n_hours == 72
    assert inst.generator_names == ["baseload", "peaker", "wind", "solar"]
    assert np.all(inst.demand >= 0)
    for gen in inst.generators:
        assert gen.availability.min() >= 0.0
        assert gen.availability.max() <= 1.0


def test_same_seed_same_series() -> None:
    a = generate_regional_series("seasonal", 96, regions=2, seed=11)
    b = generate_regional_series("seasonal", 96, regions=2, seed=11)
    pd.testing.assert_frame_equal(a, b)
    c = generate_regional_series("seasonal", 96, regions=2, seed=12)
    assert not a.equals(c)


def test_adding_a_region_keeps_earlier_ones() -> None:
    two = generate_regional_series("iid", 48, regions=2, seed=4)
    three = generate_regional_series("iid", 48, regions=3, seed=4)
    pd.testing.assert_frame_equal(two, three[["R01", "R02"]])


def test_multi_region_generators() -> None:
    inst = generate_synthetic("seasonal", 48, regions=2)
    assert inst.generator_names == [
        "baseload",
        "peaker",
        "wind_R01",
        "solar_R01",
        "wind_R02",
        "solar_R02",
    ]


def test_peaky_profile_has_one_dark_day() -> None:
    n = 24 * 6
    series = generate_regional_series("peaky", n, seed=0)
    day = extreme_day_index(n)
    hours = slice(day * 24, (day + 1) * 24)
    region = series["R01"]
    assert (region["wind"].iloc[hours] == 0).all()
    assert (region["solar"].iloc[hours] == 0).all()
    assert region["load"].iloc[hours].min() > region["load"].drop(
        region.index[hours]
    ).max()


def test_alternating_days_repeat_every_two_days() -> None:
    load = generate_regional_series("alternating-days", 24 * 6, seed=2)[("R01", "load")]
    values = load.to_numpy().reshape(6, 24)
    np.testing.assert_array_equal(values[0], values[2])
    np.testing.assert_array_equal(values[1], values[3])
    assert not np.array_equal(values[0], values[1])


def test_costs_scale_with_horizon() -> None:
    one = generate_synthetic("iid", 24)
    two = generate_synthetic("iid", 48)
    assert two.cap_costs()[0] == pytest.approx(2 * one.cap_costs()[0])
    assert two.storage.room_cost == pytest.approx(2 * one.storage.room_cost)


def test_request_errors() -> None:
    with pytest.raises(InvalidParameter):
        generate_synthetic("sunny", 24)
    with pytest.raises(IndivisibleHorizon):
        generate_synthetic("seasonal", 30)
    with pytest.raises(InvalidParameter):
        generate_synthetic("peaky", 24)
    with pytest.raises(InvalidParameter):
        generate_synthetic("iid", 24, regions=0)
