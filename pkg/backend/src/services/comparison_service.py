"""Method comparisons: every method solved on one instance, reported against a baseline.

Rows follow the classic aggregation-error table: storage room, storage door,
objective, net energy value, net capacity value and wall-clock seconds. The
baseline row (the full-resolution solve when present) is absolute; every
other row is divided by it.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from backend.src.config import get_app_config
from backend.src.models.domain import Aggregation, SolveResult, SystemInstance
from backend.src.models.schemas import MethodDocument, ScenarioDocument
from backend.src.processors.admm import AdmmConfig, admm_solve
from backend.src.processors.agg_model import expand_solution, solve_aggregated
from backend.src.processors.aggregation import (
    adjacent_clusters,
    aggregate_identity,
    check_lossless,
    compress_lossless,
    representative_days,
    system_states,
)
from backend.src.processors.model_core import solve_core
from backend.src.processors.valuation import value_report
from backend.src.utils.constants import COMPARISON_ROWS
from backend.src.utils.errors import InvalidParameter, MaxItersExceeded, StoragePlanError
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)


@dataclass(frozen=True)
class Scenario:
    instance: SystemInstance
    methods: tuple[MethodDocument, ...]
    carbon_price: float = 0.0
    sweep: tuple[float, ...] = ()
    name: str = "scenario"
    workers: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "sweep", tuple(float(p) for p in self.sweep))
        if not self.methods:
            raise InvalidParameter("a scenario needs at least one method")
        if any(p <= 0 for p in self.sweep):
            raise InvalidParameter("sweep points must be positive")
        if self.carbon_price < 0:
            raise InvalidParameter("carbon_price must be >= 0")
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise InvalidParameter(f"method labels must be unique: {labels}")

    @property
    def labels(self) -> list[str]:
        return [m.display_name for m in self.methods]

    @classmethod
    def from_document(cls, doc: ScenarioDocument, instance: SystemInstance) -> Scenario:
        return cls(
            instance=instance,
            methods=tuple(doc.methods),
            carbon_price=doc.carbon_price,
            sweep=tuple(doc.sweep),
            name=doc.name,
            workers=doc.workers,
        )


@dataclass
class MethodOutcome:
    label: str
    kind: str
    storage_room: float = math.nan
    storage_door: float = math.nan
    objective: float = math.nan
    energy_value: float = math.nan
    capacity_value: float = math.nan
    solve_seconds: float = math.nan
    n_states: int | None = None
    lossless: bool | None = None
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def value(self, row: str) -> float:
        return float(getattr(self, row))


@dataclass
class ComparisonReport:
    scenario: str
    baseline: str | None
    rows: list[MethodOutcome]
    sweep: pd.DataFrame = field(
        default_factory=lambda: pd.DataFrame(columns=["method", "room_cost", "storage_room"])
    )

    def outcome(self, label: str) -> MethodOutcome:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)

    def absolute(self) -> pd.DataFrame:
        data = {r.label: [r.value(k) for k in COMPARISON_ROWS] for r in self.rows}
        return pd.DataFrame(data, index=list(COMPARISON_ROWS.values()))

    def relative(self) -> pd.DataFrame:
        """Every column divided by the baseline column (the baseline itself reads 1.0)."""
        if self.baseline is None:
            raise InvalidParameter("relative values need a baseline method")
        base = self.outcome(self.baseline)
        data = {
            r.label: [_ratio(r.value(k), base.value(k)) for k in COMPARISON_ROWS]
            for r in self.rows
        }
        return pd.DataFrame(data, index=list(COMPARISON_ROWS.values()))

    def table(self) -> pd.DataFrame:
        """Baseline column absolute, every other column relative to it."""
        if self.baseline is None:
            return self.absolute()
        table = self.relative()
        table[self.baseline] = self.absolute()[self.baseline]
        return table

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "baseline": self.baseline,
            "rows": [
                {
                    k: v
                    for k, v in r.__dict__.items()
                    if not isinstance(v, float) or math.isfinite(v)
                }
                for r in self.rows
            ],
            "sweep": self.sweep.to_dict(orient="records"),
        }


def _ratio(value: float, base: float) -> float:
    if math.isnan(value) or math.isnan(base):
        return math.nan
    if base == 0:
        return 1.0 if abs(value) == 0 else math.inf
    return value / base


# ---------------------------------------------------------------------------
# One method
# ---------------------------------------------------------------------------
def build_aggregation(instance: SystemInstance, method: MethodDocument) -> Aggregation:
    kind = method.kind
    if kind == "identity":
        return aggregate_identity(instance.grid, instance)
    if kind == "rep-days":
        return representative_days(instance, method.k, method.linkage, method.selection)
    if kind == "system-states":
        return system_states(instance, method.k)
    if kind == "adjacent":
        return adjacent_clusters(instance, method.k)
    if kind == "lossless":
        return compress_lossless(instance, method.tol)
    raise InvalidParameter(f"method {kind!r} does not build an aggregation")


def solve_method(
    instance: SystemInstance, method: MethodDocument
) -> tuple[SolveResult, Aggregation | None]:
    """Hourly result of ``method``; aggregated solves are expanded back to hours."""
    if method.kind == "full":
        return solve_core(instance), None
    if method.kind == "admm":
        cfg = AdmmConfig(**method.admm.model_dump())
        try:
            result, _ = admm_solve(instance, cfg)
        except MaxItersExceeded as e:
            result = e.result
            result.meta["flags"] = ["max_iters"]
        return result, None
    agg = build_aggregation(instance, method)
    agg_res = solve_aggregated(instance, agg)
    return expand_solution(agg_res, agg), agg


def run_method(instance: SystemInstance, method: MethodDocument) -> MethodOutcome:
    label = method.display_name
    start = time.perf_counter()
    try:
        result, agg = solve_method(instance, method)
        report = value_report(result, instance, check=False)
    except StoragePlanError as e:
        logger.error("method failed", method=label, error=str(e))
        return MethodOutcome(label=label, kind=method.kind, error=f"{type(e).__name__}: {e}")
    elapsed = time.perf_counter() - start

    outcome = MethodOutcome(
        label=label,
        kind=method.kind,
        storage_room=result.u,
        storage_door=result.t,
        objective=result.objective,
        energy_value=report.energy_value,
        capacity_value=report.capacity_value,
        solve_seconds=elapsed,
        flags=list(report.flags) + list(result.meta.get("flags", [])),
    )
    if agg is not None:
        outcome.n_states = agg.n_states
        outcome.lossless = check_lossless(agg, instance).lossless
    logger.info(
        "method finished",
        method=label,
        objective=outcome.objective,
        room=outcome.storage_room,
        door=outcome.storage_door,
        seconds=round(elapsed, 3),
    )
    return outcome


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------
def _sweep_point(
    instance: SystemInstance, method: MethodDocument, room_cost: float
) -> dict[str, Any]:
    label = method.display_name
    try:
        result, _ = solve_method(instance.with_storage_costs(room_cost=room_cost), method)
        u = result.u
    except StoragePlanError as e:
        logger.error("sweep point failed", method=label, room_cost=room_cost, error=str(e))
        u = math.nan
    return {"method": label, "room_cost": room_cost, "storage_room": u}


def sweep(scenario: Scenario, workers: int | None = None) -> pd.DataFrame:
    """(method, room cost, optimal u) for every method and sweep point, sorted by cost."""
    instance = scenario.instance.with_carbon_price(scenario.carbon_price)
    points = sorted(scenario.sweep)
    workers = workers or scenario.workers or get_app_config().comparison_workers
    jobs = [(m, c) for m in scenario.methods for c in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(lambda job: _sweep_point(instance, *job), jobs))
    return pd.DataFrame(records, columns=["method", "room_cost", "storage_room"])


def run_comparison(scenario: Scenario, workers: int | None = None) -> ComparisonReport:
    instance = scenario.instance.with_carbon_price(scenario.carbon_price)
    workers = workers or scenario.workers or get_app_config().comparison_workers
    logger.info(
        "comparison started",
        scenario=scenario.name,
        methods=len(scenario.methods),
        hours=instance.n_hours,
        workers=workers,
    )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda m: run_method(instance, m), scenario.methods))

    baseline: str | None = next((r.label for r in rows if r.kind == "full"), None)
    if baseline is not None and not rows[scenario.labels.index(baseline)].ok:
        baseline = None

    report = ComparisonReport(scenario=scenario.name, baseline=baseline, rows=rows)
    if scenario.sweep:
        report.sweep = sweep(scenario, workers)
    failed = [r.label for r in rows if not r.ok]
    if failed:
        logger.warning("comparison finished with failures", failed=failed)
    logger.info("comparison finished", scenario=scenario.name, baseline=baseline)
    return report


def storage_room_curve(report: ComparisonReport) -> dict[str, np.ndarray]:
    """Sweep curve per method as an array of (room_cost, storage_room) pairs."""
    return {
        label: group[["room_cost", "storage_room"]].to_numpy()
        for label, group in report.sweep.groupby("method", sort=False)
    }
