"""Synthetic hourly systems for tests, demos and the comparison harness.

Every profile is a deterministic function of ``seed``: region ``i`` draws from
``np.random.default_rng([seed, i])`` so adding a region never changes the
series of the regions before it.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from backend.src.models.domain import GeneratorSpec, StorageSpec, SystemInstance, TimeGrid
from backend.src.utils.constants import (
    HOURS_PER_DAY,
    SYNTHETIC_BASE_LOAD,
    SYNTHETIC_PROFILES,
    SYNTHETIC_STORAGE,
    SYNTHETIC_TECHNOLOGIES,
)
from backend.src.utils.errors import IndivisibleHorizon, InvalidParameter
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)

FEATURES: tuple[str, ...] = ("load", "wind", "solar")
DAY_STRUCTURED: frozenset[str] = frozenset({"peaky", "seasonal", "alternating-days"})


def region_names(regions: int) -> list[str]:
    return [f"R{i + 1:02d}" for i in range(regions)]


def extreme_day_index(n_hours: int) -> int:
    """Day that ``peaky`` turns into the scarcity day."""
    return (n_hours // HOURS_PER_DAY) // 2


# ---------------------------------------------------------------------------
# Daily shapes
# ---------------------------------------------------------------------------
def _load_shape(hod: np.ndarray) -> np.ndarray:
    evening = 0.2 * np.exp(-(((hod - 19) / 3.0) ** 2))
    night = 0.15 * np.exp(-(((hod - 4) / 3.0) ** 2))
    return 1.0 + evening - night


def _solar_shape(hod: np.ndarray) -> np.ndarray:
    return np.clip(np.sin(np.pi * (hod - 6) / 12.0), 0.0, None)


def _smooth_noise(
    rng: np.random.Generator, n: int, scale: float, memory: float = 0.9
) -> np.ndarray:
    shocks: np.ndarray = rng.normal(0.0, scale, n)
    out: np.ndarray = np.empty(n)
    level: float = 0.0
    for h in range(n):
        level = memory * level + shocks[h]
        out[h] = level
    return out


# ---------------------------------------------------------------------------
# Per-profile generators: each returns (load, wind, solar) for one region
# ---------------------------------------------------------------------------
def _iid(rng: np.random.Generator, n: int) -> tuple[np.ndarray, ...]:
    load = SYNTHETIC_BASE_LOAD * rng.uniform(0.6, 1.4, n)
    return load, rng.uniform(0.0, 1.0, n), rng.uniform(0.0, 1.0, n)


def _alternating_days(rng: np.random.Generator, n: int) -> tuple[np.ndarray, ...]:
    hod = np.arange(HOURS_PER_DAY)
    shape = _load_shape(hod)
    load_a = SYNTHETIC_BASE_LOAD * shape * (1.0 + 0.05 * rng.normal(size=HOURS_PER_DAY))
    load_b = 1.1 * SYNTHETIC_BASE_LOAD * shape
    wind_a = rng.uniform(0.2, 0.6, HOURS_PER_DAY)
    wind_b = rng.uniform(0.0, 0.3, HOURS_PER_DAY)
    solar_a = _solar_shape(hod) * rng.uniform(0.7, 1.0)
    solar_b = _solar_shape(hod) * 0.4

    n_days = n // HOURS_PER_DAY
    pick_a = (np.arange(n_days) % 2 == 0)[:, None]

    def tile(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.where(pick_a, a[None, :], b[None, :]).ravel()

    return tile(load_a, load_b), tile(wind_a, wind_b), tile(solar_a, solar_b)


def _seasonal(rng: np.random.Generator, n: int) -> tuple[np.ndarray, ...]:
    h = np.arange(n)
    hod, day = h % HOURS_PER_DAY, h // HOURS_PER_DAY
    season = np.cos(2.0 * np.pi * day / 365.0)
    load = SYNTHETIC_BASE_LOAD * _load_shape(hod) * (1.0 + 0.2 * season)
    load *= 1.0 + 0.03 * rng.normal(size=n)
    clouds = rng.uniform(0.6, 1.0, n // HOURS_PER_DAY)[day]
    solar = _solar_shape(hod) * (0.75 - 0.25 * season) * clouds
    wind = 0.35 + 0.15 * season + _smooth_noise(rng, n, 0.05)
    return np.clip(load, 0.0, None), np.clip(wind, 0.0, 1.0), np.clip(solar, 0.0, 1.0)


def _peaky(rng: np.random.Generator, n: int) -> tuple[np.ndarray, ...]:
    """Mild days around one dark, windless day with twice the average load."""
    h = np.arange(n)
    hod, day = h % HOURS_PER_DAY, h // HOURS_PER_DAY
    load = SYNTHETIC_BASE_LOAD * _load_shape(hod) * (1.0 + 0.02 * rng.normal(size=n))
    solar = _solar_shape(hod) * rng.uniform(0.8, 1.0, n // HOURS_PER_DAY)[day]
    wind = 0.3 + 0.1 * np.sin(2.0 * np.pi * h / (HOURS_PER_DAY * 3.7))
    wind = np.clip(wind + _smooth_noise(rng, n, 0.01), 0.15, 0.5)

    extreme = day == extreme_day_index(n)
    load[extreme] = 2.0 * SYNTHETIC_BASE_LOAD
    wind[extreme] = 0.0
    solar[extreme] = 0.0
    return load, wind, solar


_PROFILE_FUNCS = {
    "iid": _iid,
    "alternating-days": _alternating_days,
    "seasonal": _seasonal,
    "peaky": _peaky,
}


def _check_request(profile: str, n: int, regions: int) -> None:
    if profile not in SYNTHETIC_PROFILES:
        raise InvalidParameter(f"profile must be one of {SYNTHETIC_PROFILES}, got {profile!r}")
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if regions < 1:
        raise InvalidParameter(f"regions must be >= 1, got {regions}")
    if profile in DAY_STRUCTURED and n % HOURS_PER_DAY:
        raise IndivisibleHorizon(f"profile {profile!r} needs whole days, got {n} hours")
    if profile == "peaky" and n < 2 * HOURS_PER_DAY:
        raise InvalidParameter("profile 'peaky' needs at least two days")


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------
def generate_regional_series(
    profile: str, n: int, regions: int = 1, seed: int = 0
) -> pd.DataFrame:
    """Hourly load (MW) and wind/solar availability per region.

    Columns are a (region, feature) MultiIndex; the index is the hour.
    """
    _check_request(profile, n, regions)
    func = _PROFILE_FUNCS[profile]
    data: dict[tuple[str, str], np.ndarray] = {}
    for i, region in enumerate(region_names(regions)):
        rng = np.random.default_rng([seed, i])
        for feature, values in zip(FEATURES, func(rng, n), strict=True):
            data[(region, feature)] = values
    frame = pd.DataFrame(data, index=pd.RangeIndex(n, name="hour"))
    frame.columns = pd.MultiIndex.from_tuples(frame.columns, names=["region", "feature"])
    return frame


def generate_synthetic(
    profile: str, n: int, regions: int = 1, seed: int = 0, cyclic: bool = True
) -> SystemInstance:
    """Fold the regional series into one system.

    Load is summed over regions; baseload and peaker are shared, and every
    region brings its own wind and solar generator.
    """
    series = generate_regional_series(profile, n, regions, seed)
    days: float = n / HOURS_PER_DAY

    def spec(tech: str, name: str, availability: np.ndarray) -> GeneratorSpec:
        t = SYNTHETIC_TECHNOLOGIES[tech]
        return GeneratorSpec(
            name=name,
            var_cost=np.full(n, t["var_cost"]),
            cap_cost=t["cap_cost"] * days,
            availability=availability,
            emission_rate=t["emission_rate"],
        )

    generators: list[GeneratorSpec] = [
        spec("baseload", "baseload", np.ones(n)),
        spec("peaker", "peaker", np.ones(n)),
    ]
    names = region_names(regions)
    for region in names:
        suffix = "" if regions == 1 else f"_{region}"
        for tech in ("wind", "solar"):
            generators.append(spec(tech, f"{tech}{suffix}", series[(region, tech)].to_numpy()))

    demand: np.ndarray = series.xs("load", axis=1, level="feature").sum(axis=1).to_numpy()
    instance = SystemInstance(
        grid=TimeGrid(n_hours=n, cyclic=cyclic),
        demand=demand,
        generators=tuple(generators),
        storage=StorageSpec(
            door_cost=SYNTHETIC_STORAGE["door_cost"] * days,
            room_cost=SYNTHETIC_STORAGE["room_cost"] * days,
        ),
    )
    logger.info(
        "synthetic instance generated",
        profile=profile,
        hours=n,
        regions=regions,
        seed=seed,
        generators=len(generators),
    )
    return instance
