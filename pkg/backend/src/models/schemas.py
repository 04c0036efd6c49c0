"""Pydantic documents for instance, aggregation and scenario files and the API."""

from __future__ import annotations

from typing import Any, Literal

import numpy as np
from pydantic import AliasChoices, BaseModel, Field, field_validator, model_validator

from backend.src.models.domain import (
    Aggregation,
    GeneratorSpec,
    StateProfiles,
    StorageSpec,
    SystemInstance,
    TimeGrid,
)
from backend.src.utils.constants import DEFAULT_ADMM, SYNTHETIC_PROFILES
from backend.src.utils.errors import DimensionMismatch


METHOD_KINDS = ("full", "identity", "rep-days", "system-states", "adjacent", "lossless", "admm")
MethodKind = Literal[
    "full", "identity", "rep-days", "system-states", "adjacent", "lossless", "admm"
]


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------
class GeneratorDocument(BaseModel):
    name: str
    var_cost: float | list[float]
    cap_cost: float
    availability: list[float]
    emission_rate: float = 0.0


class StorageDocument(BaseModel):
    door_cost: float
    room_cost: float


class InstanceDocument(BaseModel):
    """Instance file: scalar ``var_cost`` is broadcast to every hour."""

    hours: int = Field(ge=1)
    cyclic: bool = True
    demand: list[float]
    generators: list[GeneratorDocument] = Field(min_length=1)
    storage: StorageDocument

    def to_instance(self) -> SystemInstance:
        n = self.hours
        if len(self.demand) != n:
            raise DimensionMismatch(f"demand has {len(self.demand)} entries, hours={n}")
        gens: list[GeneratorSpec] = []
        for g in self.generators:
            var_cost = (
                np.full(n, float(g.var_cost))
                if isinstance(g.var_cost, (int, float))
                else np.asarray(g.var_cost, dtype=float)
            )
            gens.append(
                GeneratorSpec(
                    name=g.name,
                    var_cost=var_cost,
                    cap_cost=g.cap_cost,
                    availability=np.asarray(g.availability, dtype=float),
                    emission_rate=g.emission_rate,
                )
            )
        return SystemInstance(
            grid=TimeGrid(n_hours=n, cyclic=self.cyclic),
            demand=np.asarray(self.demand, dtype=float),
            generators=tuple(gens),
            storage=StorageSpec(self.storage.door_cost, self.storage.room_cost),
        )

    @classmethod
    def from_instance(cls, instance: SystemInstance) -> InstanceDocument:
        gens = []
        for g in instance.generators:
            flat = bool(np.all(g.var_cost == g.var_cost[0]))
            gens.append(
                GeneratorDocument(
                    name=g.name,
                    var_cost=float(g.var_cost[0]) if flat else g.var_cost.tolist(),
                    cap_cost=g.cap_cost,
                    availability=g.availability.tolist(),
                    emission_rate=g.emission_rate,
                )
            )
        return cls(
            hours=instance.n_hours,
            cyclic=instance.grid.cyclic,
            demand=instance.demand.tolist(),
            generators=gens,
            storage=StorageDocument(
                door_cost=instance.storage.door_cost, room_cost=instance.storage.room_cost
            ),
        )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------
class ProfilesDocument(BaseModel):
    demand: list[float]
    availability: dict[str, list[float]] = Field(default_factory=dict)
    var_cost: dict[str, list[float]] = Field(default_factory=dict)


class AggregationDocument(BaseModel):
    gamma: list[int]
    w: list[float]
    q: list[float]
    P: list[list[float]]
    profiles: ProfilesDocument
    cyclic: bool = True
    method: str = "custom"
    meta: dict[str, Any] = Field(default_factory=dict)

    def to_aggregation(self, generator_names: list[str] | None = None) -> Aggregation:
        names = generator_names if generator_names is not None else list(self.profiles.availability)
        S = len(self.w)
        if names and any(n not in self.profiles.availability for n in names):
            raise DimensionMismatch("profiles do not cover every generator of the instance")
        avail = np.array([self.profiles.availability[n] for n in names]).reshape(len(names), S)
        cost = np.array(
            [self.profiles.var_cost.get(n, [0.0] * S) for n in names]
        ).reshape(len(names), S)
        agg = Aggregation(
            gamma=np.asarray(self.gamma, dtype=int),
            w=np.asarray(self.w, dtype=float),
            q=np.asarray(self.q, dtype=float),
            transition=np.asarray(self.P, dtype=float),
            profiles=StateProfiles(
                demand=np.asarray(self.profiles.demand), availability=avail, var_cost=cost
            ),
            cyclic=self.cyclic,
            method=self.method,
            meta=dict(self.meta),
        )
        agg.validate()
        return agg

    @classmethod
    def from_aggregation(cls, agg: Aggregation, generator_names: list[str]) -> AggregationDocument:
        p = agg.profiles
        has_gens = p.availability.shape[0] == len(generator_names)
        return cls(
            gamma=agg.gamma.tolist(),
            w=agg.w.tolist(),
            q=agg.q.tolist(),
            P=agg.transition.tolist(),
            profiles=ProfilesDocument(
                demand=p.demand.tolist(),
                availability=(
                    {n: p.availability[i].tolist() for i, n in enumerate(generator_names)}
                    if has_gens
                    else {}
                ),
                var_cost=(
                    {n: p.var_cost[i].tolist() for i, n in enumerate(generator_names)}
                    if has_gens
                    else {}
                ),
            ),
            cyclic=agg.cyclic,
            method=agg.method,
            meta={k: v for k, v in agg.meta.items() if isinstance(v, (int, float, str, list))},
        )


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------
class SyntheticSource(BaseModel):
    profile: str
    hours: int = Field(ge=1)
    regions: int = Field(default=1, ge=1)
    seed: int = 0
    cyclic: bool = True

    @field_validator("profile")
    @classmethod
    def _known_profile(cls, v: str) -> str:
        if v not in SYNTHETIC_PROFILES:
            raise ValueError(f"profile must be one of {SYNTHETIC_PROFILES}")
        return v


class InstanceSource(BaseModel):
    path: str | None = None
    synthetic: SyntheticSource | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> InstanceSource:
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("instance needs exactly one of 'path' or 'synthetic'")
        return self


class AdmmParams(BaseModel):
    beta: float = Field(default=DEFAULT_ADMM["beta"], gt=0)
    max_iters: int = Field(default=DEFAULT_ADMM["max_iters"], ge=1)
    eps_primal: float = Field(default=DEFAULT_ADMM["eps_primal"], gt=0)
    eps_dual: float = Field(default=DEFAULT_ADMM["eps_dual"], gt=0)
    partition: str = Field(
        default=DEFAULT_ADMM["partition"], validation_alias=AliasChoices("partition", "blocks")
    )
    adaptive_penalty: bool = False

    @model_validator(mode="before")
    @classmethod
    def _shared_eps(cls, data: Any) -> Any:
        # "eps" sets both residual tolerances unless one is given explicitly
        if isinstance(data, dict) and "eps" in data:
            data = dict(data)
            eps = data.pop("eps")
            data.setdefault("eps_primal", eps)
            data.setdefault("eps_dual", eps)
        return data


class MethodDocument(BaseModel):
    kind: MethodKind
    k: int | None = Field(default=None, ge=1)
    selection: str = "kmeans-medoid"
    linkage: str = "isolated"
    tol: float = Field(default=0.0, ge=0)
    admm: AdmmParams = Field(default_factory=AdmmParams)
    label: str | None = None

    @model_validator(mode="after")
    def _needs_k(self) -> MethodDocument:
        if self.kind in ("rep-days", "system-states", "adjacent") and self.k is None:
            raise ValueError(f"method {self.kind!r} needs k")
        return self

    @property
    def display_name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "rep-days":
            return f"rep-days({self.k},{self.selection},{self.linkage})"
        if self.kind in ("system-states", "adjacent"):
            return f"{self.kind}({self.k})"
        if self.kind == "admm":
            return f"admm({self.admm.partition})"
        return self.kind


class ScenarioDocument(BaseModel):
    name: str = "scenario"
    instance: InstanceSource
    methods: list[MethodDocument] = Field(min_length=1)
    carbon_price: float = Field(default=0.0, ge=0)
    sweep: list[float] = Field(default_factory=list)
    workers: int | None = Field(default=None, ge=1)

    @field_validator("sweep")
    @classmethod
    def _positive_points(cls, v: list[float]) -> list[float]:
        if any(p <= 0 for p in v):
            raise ValueError("sweep points must be positive")
        return v


# ---------------------------------------------------------------------------
# API
# ---------------------------------------------------------------------------
class SolveRequest(BaseModel):
    instance: InstanceDocument
    backend: Literal["highs", "cvxpy"] = "highs"


class ValuationRequest(BaseModel):
    instance: InstanceDocument


class AggregateRequest(BaseModel):
    instance: InstanceDocument
    method: MethodDocument


class CompareRequest(BaseModel):
    scenario: ScenarioDocument


class HealthResponse(BaseModel):
    status: str
    lp_method: str
    qp_solver: str
