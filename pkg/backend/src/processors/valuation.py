"""Dual-based storage valuation.

Works on the dual vector actually returned by the solver: LP duals are not
unique under degeneracy, so every identity is evaluated on that vector.

Identities at a KKT point (``r > 0`` charges):

    sum_h tau_h                  = c^u        when u > 0
    sum_h (delta_c + delta_d)_h  = c^t        when t > 0
    sum_h (omega_{h+1} - omega_h)^+ = c^u     when u > 0
    omega_h = lambda_h + delta_c_h - delta_d_h

The room value also decomposes over cycles between zero state-of-charge
hours, inside which omega never decreases.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from backend.src.config import get_app_config
from backend.src.models.domain import SolveResult, SystemInstance
from backend.src.processors.model_core import audit_kkt
from backend.src.utils.errors import IdentityViolation, NotCyclicError, NotOptimalError
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    asserted: bool

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def holds(self) -> bool:
        return not self.asserted or self.residual <= self.tolerance

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "residual": self.residual, "holds": self.holds}


@dataclass(frozen=True)
class Cycle:
    start: int  # a(k): first hour after a zero state of charge
    end: int  # b(k): next zero state-of-charge hour
    value: float  # omega_end - omega_start
    monotone: bool = True


@dataclass
class CycleDecomposition:
    cycles: list[Cycle]
    no_zero_soc: bool = False
    identity: IdentityCheck | None = None

    @property
    def total(self) -> float:
        return float(sum(c.value for c in self.cycles))


@dataclass(frozen=True)
class OmegaPriceRecord:
    hour: int
    omega: float
    lambda_: float
    delta_c: float
    delta_d: float
    active: bool

    @property
    def residual(self) -> float:
        return abs(self.omega - (self.lambda_ + self.delta_c - self.delta_d))


@dataclass
class EnergyCapacitySplit:
    energy_value: float
    capacity_value: float
    scarcity_premium: np.ndarray
    lambda_star: np.ndarray
    anchored_hours: list[int] = field(default_factory=list)


@dataclass
class ValueReport:
    room_rent_sum: float
    door_rent_sum: float
    omega_pos_diff_sum: float
    storage_room: float
    storage_door: float
    checks: list[IdentityCheck] = field(default_factory=list)
    cycles: list[Cycle] = field(default_factory=list)
    energy_value: float = 0.0
    capacity_value: float = 0.0
    scarcity_premium: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flags: list[str] = field(default_factory=list)

    @property
    def energy_value_per_door(self) -> float:
        """Gross energy value per unit of installed door capacity."""
        return self.energy_value / self.storage_door if self.storage_door > 0 else 0.0

    @property
    def capacity_value_per_door(self) -> float:
        return self.capacity_value / self.storage_door if self.storage_door > 0 else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "room_rent_sum": self.room_rent_sum,
            "door_rent_sum": self.door_rent_sum,
            "omega_pos_diff_sum": self.omega_pos_diff_sum,
            "storage_room": self.storage_room,
            "storage_door": self.storage_door,
            "energy_value": self.energy_value,
            "capacity_value": self.capacity_value,
            "energy_value_per_door": self.energy_value_per_door,
            "capacity_value_per_door": self.capacity_value_per_door,
            "scarcity_premium": np.asarray(self.scarcity_premium).tolist(),
            "cycles": [asdict(c) for c in self.cycles],
            "checks": [c.to_dict() for c in self.checks],
            "flags": list(self.flags),
        }


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
def identity_tolerance(instance: SystemInstance) -> float:
    storage = instance.storage
    return get_app_config().eps_id * max(1.0, storage.room_cost, storage.door_cost)


def _is_cyclic(result: SolveResult) -> bool:
    return bool(result.meta.get("cyclic", True))


def _omega_next(result: SolveResult) -> np.ndarray:
    om = result.omega
    if _is_cyclic(result):
        return np.roll(om, -1)
    return np.concatenate([om[1:], [0.0]])


def _deployed(value: float) -> bool:
    return value > get_app_config().eps_feas


def _require_optimal(instance: SystemInstance, result: SolveResult) -> None:
    report = audit_kkt(instance, result)
    if not report.ok:
        raise NotOptimalError(
            f"result fails its KKT audit ({len(report.violations)} violations, "
            f"worst {report.max_violation:.3e})",
            report,
        )


def _raise_on_failures(checks: list[IdentityCheck]) -> None:
    failing = [c for c in checks if not c.holds]
    if failing:
        names = ", ".join(f"{c.name} (residual {c.residual:.3e})" for c in failing)
        raise IdentityViolation(f"marginal-value identities violated: {names}", failing)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------
def marginal_values(
    result: SolveResult, instance: SystemInstance, check: bool = True
) -> ValueReport:
    """Rent sums and the room/door identities; asserted only for deployed capacity."""
    if check:
        _require_optimal(instance, result)
    tol: float = identity_tolerance(instance)
    room_rent: float = float(np.sum(result.tau))
    door_rent: float = float(np.sum(result.delta_c + result.delta_d))
    pos_diff: float = float(np.sum(np.maximum(_omega_next(result) - result.omega, 0.0)))
    c_u, c_t = instance.storage.room_cost, instance.storage.door_cost
    has_room, has_door = _deployed(result.u), _deployed(result.t)

    checks = [
        IdentityCheck("room_rent", room_rent, c_u, tol, has_room),
        IdentityCheck("door_rent", door_rent, c_t, tol, has_door),
        IdentityCheck("omega_positive_differences", pos_diff, c_u, tol, has_room),
    ]
    if check:
        _raise_on_failures(checks)
    return ValueReport(
        room_rent_sum=room_rent,
        door_rent_sum=door_rent,
        omega_pos_diff_sum=pos_diff,
        storage_room=float(result.u),
        storage_door=float(result.t),
        checks=checks,
    )


def cycle_decomposition(
    result: SolveResult, room_cost: float | None = None, check: bool = True
) -> CycleDecomposition:
    """Split the horizon at zero state-of-charge hours.

    Cycle k runs from the hour after a zero-SOC hour, a(k), to the next
    zero-SOC hour, b(k); its value is omega[b] - omega[a]. Without any
    zero-SOC hour the whole horizon comes back as one flagged cycle.
    """
    if not _is_cyclic(result):
        raise NotCyclicError("cycle decomposition needs a cyclic storage boundary")
    cfg = get_app_config()
    if not _deployed(result.u):
        return CycleDecomposition(cycles=[])

    n: int = result.n_hours
    om: np.ndarray = result.omega
    zero_hours: np.ndarray = np.flatnonzero(result.s <= cfg.eps_feas * max(1.0, result.u))
    if zero_hours.size == 0:
        logger.warning("no zero state-of-charge hour, returning one cycle", hours=n)
        decomposition = CycleDecomposition(
            cycles=[Cycle(start=0, end=n - 1, value=float(om[-1] - om[0]), monotone=False)],
            no_zero_soc=True,
        )
    else:
        decomposition = CycleDecomposition(cycles=_cycles_between(om, zero_hours, cfg.eps_id))

    if room_cost is not None:
        # a single unsplit cycle carries no identity
        decomposition.identity = IdentityCheck(
            "cycle_sum",
            decomposition.total,
            room_cost,
            cfg.eps_id * max(1.0, room_cost),
            not decomposition.no_zero_soc,
        )
        if check:
            _raise_on_failures([decomposition.identity])
    return decomposition


def _cycles_between(om: np.ndarray, zero_hours: np.ndarray, eps_id: float) -> list[Cycle]:
    n: int = om.shape[0]
    slack: float = eps_id * max(1.0, float(np.max(np.abs(om))))
    cycles: list[Cycle] = []
    for i, h0 in enumerate(zero_hours):
        h1 = int(zero_hours[(i + 1) % zero_hours.size])
        a: int = (int(h0) + 1) % n
        if a == h1:
            continue
        span: np.ndarray = (a + np.arange((h1 - a) % n + 1)) % n
        steps: np.ndarray = np.diff(om[span])
        cycles.append(
            Cycle(
                start=a,
                end=h1,
                value=float(om[h1] - om[a]),
                monotone=bool(np.all(steps >= -slack)),
            )
        )
    return cycles


def omega_price_relation(
    result: SolveResult, instance: SystemInstance | None = None, check: bool = True
) -> list[OmegaPriceRecord]:
    """Per-hour (omega, lambda, delta) records; the relation is asserted where storage moves."""
    if instance is not None and check:
        _require_optimal(instance, result)
    cfg = get_app_config()
    active: np.ndarray = np.abs(result.r) > cfg.eps_feas
    records = [
        OmegaPriceRecord(
            hour=h,
            omega=float(result.omega[h]),
            lambda_=float(result.lambda_[h]),
            delta_c=float(result.delta_c[h]),
            delta_d=float(result.delta_d[h]),
            active=bool(active[h]),
        )
        for h in range(result.n_hours)
    ]
    if check:
        scale: float = (
            identity_tolerance(instance)
            if instance is not None
            else cfg.eps_id * max(1.0, float(np.max(np.abs(result.omega), initial=0.0)))
        )
        bad = [rec for rec in records if rec.active and rec.residual > scale]
        if bad:
            raise IdentityViolation(
                f"omega = lambda + delta_c - delta_d fails at {len(bad)} active hours",
                bad,
            )
    return records


def scarcity_premium(
    result: SolveResult, instance: SystemInstance
) -> tuple[np.ndarray, list[int]]:
    """gamma*_h = min over dispatched generators of (lambda_h - c^x_{g,h}).

    Hours served by storage alone anchor on the most expensive built
    generator instead, floored at zero; those hours are returned as well.
    """
    cfg = get_app_config()
    c: np.ndarray = instance.var_cost_matrix()
    lam: np.ndarray = result.lambda_
    thr: float = cfg.eps_feas * max(1.0, float(np.max(instance.demand, initial=0.0)))
    dispatched: np.ndarray = result.x > thr
    margin: np.ndarray = np.where(dispatched, lam[None, :] - c, np.inf)
    gamma: np.ndarray = margin.min(axis=0)

    anchored: list[int] = np.flatnonzero(~dispatched.any(axis=0)).tolist()
    if anchored:
        built: np.ndarray = result.z > thr
        for h in anchored:
            marginal = c[built, h].max() if built.any() else 0.0
            gamma[h] = max(0.0, float(lam[h] - marginal))
    return gamma, anchored


def energy_capacity_split(
    result: SolveResult, instance: SystemInstance, check: bool = True
) -> EnergyCapacitySplit:
    """Storage profit at scarcity-free prices and from the scarcity premium.

    energy_value = -r . lambda*, capacity_value = -r . gamma*, with
    lambda* = lambda - gamma*, so their sum is -r . lambda.
    """
    if check:
        _require_optimal(instance, result)
    gamma, anchored = scarcity_premium(result, instance)
    lam_star: np.ndarray = result.lambda_ - gamma
    if anchored:
        logger.warning("scarcity premium anchored on built capacity", hours=len(anchored))
    return EnergyCapacitySplit(
        energy_value=float(-(result.r @ lam_star)),
        capacity_value=float(-(result.r @ gamma)),
        scarcity_premium=gamma,
        lambda_star=lam_star,
        anchored_hours=anchored,
    )


def value_report(
    result: SolveResult, instance: SystemInstance, check: bool = True
) -> ValueReport:
    """Identities, cycles and the energy/capacity split in one report."""
    report = marginal_values(result, instance, check=check)
    flags: list[str] = []

    cycles: list[Cycle] = []
    if _is_cyclic(result):
        room_cost = instance.storage.room_cost if _deployed(result.u) else None
        decomposition = cycle_decomposition(result, room_cost=room_cost, check=check)
        cycles = decomposition.cycles
        if decomposition.no_zero_soc:
            flags.append("no_zero_soc")
        if room_cost is not None:
            report.checks.append(
                IdentityCheck(
                    "cycle_sum",
                    decomposition.total,
                    room_cost,
                    identity_tolerance(instance),
                    not decomposition.no_zero_soc,
                )
            )
    else:
        flags.append("not_cyclic")

    omega_price_relation(result, instance=instance, check=check)
    split = energy_capacity_split(result, instance, check=False)
    if split.anchored_hours:
        flags.append("storage_only_hours")

    logger.info(
        "value report",
        room=report.storage_room,
        door=report.storage_door,
        energy_value=split.energy_value,
        capacity_value=split.capacity_value,
    )
    return replace(
        report,
        cycles=cycles,
        energy_value=split.energy_value,
        capacity_value=split.capacity_value,
        scarcity_premium=split.scarcity_premium,
        flags=flags,
    )
