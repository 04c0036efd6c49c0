"""Numerical domain types — instances, solve results and aggregations.

Arrays are stored read-only so a ``SystemInstance`` or ``Aggregation`` can be
shared between concurrent solves without copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from backend.src.utils.constants import ROW_SUM_TOL
from backend.src.utils.errors import DimensionMismatch, InvalidInstance


def _frozen(values: Any, dtype: type = float) -> np.ndarray:
    arr: np.ndarray = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TimeGrid:
    n_hours: int
    cyclic: bool = True

    def __post_init__(self) -> None:
        if int(self.n_hours) < 1:
            raise InvalidInstance(f"n_hours must be >= 1, got {self.n_hours}")

    def previous(self, h: int) -> int | None:
        """Index of the hour feeding storage into hour ``h`` (None at a non-cyclic start)."""
        if h > 0:
            return h - 1
        return self.n_hours - 1 if self.cyclic else None


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    var_cost: np.ndarray
    cap_cost: float
    availability: np.ndarray
    emission_rate: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "var_cost", _frozen(self.var_cost))
        object.__setattr__(self, "availability", _frozen(self.availability))
        if not np.all(np.isfinite(self.var_cost)):
            raise InvalidInstance(f"generator {self.name!r}: var_cost must be finite")
        if self.cap_cost < 0:
            raise InvalidInstance(f"generator {self.name!r}: cap_cost must be >= 0")
        if np.any(self.availability < 0) or np.any(self.availability > 1):
            raise InvalidInstance(f"generator {self.name!r}: availability must lie in [0, 1]")
        if self.emission_rate < 0:
            raise InvalidInstance(f"generator {self.name!r}: emission_rate must be >= 0")


@dataclass(frozen=True)
class StorageSpec:
    door_cost: float
    room_cost: float

    def __post_init__(self) -> None:
        if self.door_cost < 0 or self.room_cost < 0:
            raise InvalidInstance("storage door_cost and room_cost must be >= 0")


@dataclass(frozen=True)
class SystemInstance:
    grid: TimeGrid
    demand: np.ndarray
    generators: tuple[GeneratorSpec, ...]
    storage: StorageSpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "demand", _frozen(self.demand))
        object.__setattr__(self, "generators", tuple(self.generators))
        n: int = self.grid.n_hours
        if self.demand.shape != (n,):
            raise DimensionMismatch(f"demand has shape {self.demand.shape}, expected ({n},)")
        if np.any(self.demand < 0):
            raise InvalidInstance("demand must be >= 0")
        if not self.generators:
            raise InvalidInstance("at least one generator is required")
        names: list[str] = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise InvalidInstance(f"generator names must be unique: {names}")
        for gen in self.generators:
            if gen.var_cost.shape != (n,) or gen.availability.shape != (n,):
                raise DimensionMismatch(
                    f"generator {gen.name!r}: var_cost/availability must have length {n}"
                )

    # -- convenience views ---------------------------------------------------
    @property
    def n_hours(self) -> int:
        return self.grid.n_hours

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @property
    def generator_names(self) -> list[str]:
        return [g.name for g in self.generators]

    def var_cost_matrix(self) -> np.ndarray:
        """(G, n) variable costs."""
        return np.vstack([g.var_cost for g in self.generators])

    def availability_matrix(self) -> np.ndarray:
        """(G, n) availability fractions."""
        return np.vstack([g.availability for g in self.generators])

    def cap_costs(self) -> np.ndarray:
        return np.array([g.cap_cost for g in self.generators], dtype=float)

    # -- derived instances ---------------------------------------------------
    def with_storage_costs(
        self, door_cost: float | None = None, room_cost: float | None = None
    ) -> SystemInstance:
        storage = StorageSpec(
            door_cost=self.storage.door_cost if door_cost is None else door_cost,
            room_cost=self.storage.room_cost if room_cost is None else room_cost,
        )
        return replace(self, storage=storage)

    def scaled_costs(self, alpha: float) -> SystemInstance:
        """Every cost multiplied by ``alpha`` (> 0)."""
        gens = tuple(
            replace(g, var_cost=g.var_cost * alpha, cap_cost=g.cap_cost * alpha)
            for g in self.generators
        )
        storage = StorageSpec(self.storage.door_cost * alpha, self.storage.room_cost * alpha)
        return replace(self, generators=gens, storage=storage)

    def with_carbon_price(self, price: float) -> SystemInstance:
        """Variable costs raised by ``price * emission_rate`` per generator."""
        if price == 0:
            return self
        gens = tuple(
            replace(g, var_cost=g.var_cost + price * g.emission_rate) for g in self.generators
        )
        return replace(self, generators=gens)


# ---------------------------------------------------------------------------
# Solve results
# ---------------------------------------------------------------------------
@dataclass
class SolveResult:
    """Hourly primal/dual pair of the full-resolution planning LP.

    Sign conventions: ``r > 0`` charges storage; ``rho``, ``delta_c``,
    ``delta_d`` and ``tau`` are non-negative rents; ``lambda_`` is the hourly
    price; ``omega`` is the price of stored energy.
    """

    x: np.ndarray  # (G, n)
    z: np.ndarray  # (G,)
    t: float
    u: float
    r: np.ndarray  # (n,)
    s: np.ndarray  # (n,)
    lambda_: np.ndarray  # (n,)
    rho: np.ndarray  # (G, n)
    omega: np.ndarray  # (n,)
    delta_c: np.ndarray  # (n,)
    delta_d: np.ndarray  # (n,)
    tau: np.ndarray  # (n,)
    objective: float
    solve_seconds: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_hours(self) -> int:
        return int(self.r.shape[0])

    def copy(self) -> SolveResult:
        return SolveResult(
            **{
                k: (np.array(v, copy=True) if isinstance(v, np.ndarray) else v)
                for k, v in self.__dict__.items()
                if k != "meta"
            },
            meta=dict(self.meta),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()
        }


@dataclass
class AggSolveResult:
    """State-indexed primal/dual pair of the aggregated LP (same roles as SolveResult)."""

    x: np.ndarray  # (G, S)
    z: np.ndarray
    t: float
    u: float
    r: np.ndarray  # (S,)
    s: np.ndarray  # (S,)
    lambda_: np.ndarray
    rho: np.ndarray
    omega: np.ndarray
    delta_c: np.ndarray
    delta_d: np.ndarray
    tau: np.ndarray
    objective: float
    solve_seconds: float = 0.0

    @property
    def n_states(self) -> int:
        return int(self.r.shape[0])

    def to_dict(self) -> dict[str, Any]:
        return {
            k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()
        }


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class StateProfiles:
    demand: np.ndarray  # (S,)
    availability: np.ndarray  # (G, S)
    var_cost: np.ndarray  # (G, S)

    def __post_init__(self) -> None:
        object.__setattr__(self, "demand", _frozen(self.demand))
        object.__setattr__(self, "availability", _frozen(np.atleast_2d(self.availability)))
        object.__setattr__(self, "var_cost", _frozen(np.atleast_2d(self.var_cost)))

    @classmethod
    def from_hours(
        cls, instance: SystemInstance, gamma: np.ndarray, n_states: int
    ) -> StateProfiles:
        """Per-state means of the hourly data mapped through ``gamma``."""
        counts: np.ndarray = np.bincount(gamma, minlength=n_states).astype(float)
        counts[counts == 0] = 1.0
        demand = np.bincount(gamma, weights=instance.demand, minlength=n_states) / counts
        avail = np.vstack(
            [
                np.bincount(gamma, weights=g.availability, minlength=n_states) / counts
                for g in instance.generators
            ]
        )
        cost = np.vstack(
            [
                np.bincount(gamma, weights=g.var_cost, minlength=n_states) / counts
                for g in instance.generators
            ]
        )
        return cls(demand=demand, availability=avail, var_cost=cost)


@dataclass(frozen=True)
class Aggregation:
    """Hour→state map with weights, visit durations and transition matrix.

    ``transition[i, j]`` is the probability of moving from state ``i`` to
    state ``j``; the aggregated storage balance reads
    ``s_j = sum_i transition[i, j] * s_i + q_j * r_j``.
    """

    gamma: np.ndarray  # (n,) state index per hour
    w: np.ndarray  # (S,) hours represented
    q: np.ndarray  # (S,) hours per visit
    transition: np.ndarray  # (S, S)
    profiles: StateProfiles
    cyclic: bool = True
    method: str = "custom"
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", _frozen(self.gamma, dtype=int))
        object.__setattr__(self, "w", _frozen(self.w))
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "transition", _frozen(np.atleast_2d(self.transition)))

    @property
    def n_states(self) -> int:
        return int(self.w.shape[0])

    @property
    def n_hours(self) -> int:
        return int(self.gamma.shape[0])

    def validate(self) -> None:
        """Raise DimensionMismatch/InvalidInstance when the type invariants fail."""
        S: int = self.n_states
        if self.q.shape != (S,) or self.transition.shape != (S, S):
            raise DimensionMismatch("w, q and transition disagree on the number of states")
        if self.profiles.demand.shape != (S,):
            raise DimensionMismatch("profiles do not match the number of states")
        if self.gamma.min(initial=0) < 0 or self.gamma.max(initial=0) >= S:
            raise DimensionMismatch("gamma maps hours outside 0..S-1")
        counts = np.bincount(self.gamma, minlength=S)
        if not np.allclose(counts, self.w):
            raise InvalidInstance("w must equal the number of hours mapped to each state")
        if np.any(self.q < 1):
            raise InvalidInstance("q must be >= 1")
        if np.any(self.transition < 0):
            raise InvalidInstance("transition entries must be >= 0")
        sums = self.transition.sum(axis=1)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if self.cyclic and np.any(bad):
            raise InvalidInstance("transition rows must sum to 1")
        if not self.cyclic:
            # only the terminal state of a non-cyclic chain may have no successor
            terminal = int(self.gamma[-1])
            others = np.delete(np.arange(S), terminal)
            if np.any(bad[others]) or not (abs(sums[terminal]) <= ROW_SUM_TOL or not bad[terminal]):
                raise InvalidInstance("transition rows must sum to 1 (terminal row may be 0)")
