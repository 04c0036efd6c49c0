"""Full-resolution greenfield planning LP with storage, and its KKT audit.

The LP (r > 0 charges storage)::

    min  sum_g c^x_g . x_g + c^z . z + c^t t + c^u u
    s.t. sum_g x_g - r = d                  : lambda
         x_g <= a_g z_g                     : rho_g    >= 0
         s_h = s_{h-1} + r_h                : omega
         r <= t,  -r <= t                   : delta_c, delta_d >= 0
         s <= u                             : tau      >= 0
         x, z, t, u, s >= 0,  r free

``build_planning_lp`` is shared with the aggregated model: the balance row
is written ``s - M s - q*r = 0`` with ``M`` the inflow matrix (previous hour
for the hourly model, the transposed transition matrix for aggregations).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from backend.src.config import get_app_config
from backend.src.models.domain import SolveResult, StorageSpec, SystemInstance
from backend.src.solvers.lp import LinearProgram, LpBuilder, LpSolution, LpSolver, default_solver
from backend.src.utils.errors import DimensionMismatch, NumericalFailure
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)


# ---------------------------------------------------------------------------
# LP construction
# ---------------------------------------------------------------------------
def hourly_inflow(n: int, cyclic: bool) -> sp.csr_matrix:
    """M with M[h, h-1] = 1 (wrapping when cyclic)."""
    rows = np.arange(1, n)
    cols = np.arange(0, n - 1)
    if cyclic:
        rows = np.append(rows, 0)
        cols = np.append(cols, n - 1)
    return sp.csr_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(n, n))


def build_planning_lp(
    demand: np.ndarray,
    availability: np.ndarray,
    var_cost: np.ndarray,
    cap_cost: np.ndarray,
    storage: StorageSpec,
    inflow: sp.spmatrix,
    weight: np.ndarray | None = None,
    duration: np.ndarray | None = None,
    with_storage: bool = True,
) -> LinearProgram:
    """Planning LP over S periods (hours or aggregate states)."""
    G, S = availability.shape
    w = np.ones(S) if weight is None else np.asarray(weight, dtype=float)
    q = np.ones(S) if duration is None else np.asarray(duration, dtype=float)

    b = LpBuilder()
    x = b.add_variables("x", (G, S), cost=var_cost * w[None, :])
    z = b.add_variables("z", G, cost=cap_cost)
    upper_storage = np.inf if with_storage else 0.0
    t = b.add_variables("t", 1, upper=upper_storage, cost=storage.door_cost)[0]
    u = b.add_variables("u", 1, upper=upper_storage, cost=storage.room_cost)[0]
    r = b.add_variables("r", S, lower=-np.inf, upper=np.inf)
    s = b.add_variables("s", S, upper=upper_storage)

    periods = np.arange(S)

    # sum_g x[g, h] - r[h] = d[h]
    b.add_constraints(
        "demand",
        "eq",
        rows=np.concatenate([np.tile(periods, G), periods]),
        cols=np.concatenate([x.ravel(), r]),
        vals=np.concatenate([np.ones(G * S), -np.ones(S)]),
        rhs=demand,
    )

    # s - M s - q r = 0
    M = sp.coo_matrix(inflow)
    b.add_constraints(
        "balance",
        "eq",
        rows=np.concatenate([periods, M.row, periods]),
        cols=np.concatenate([s, s[M.col], r]),
        vals=np.concatenate([np.ones(S), -M.data, -q]),
        rhs=np.zeros(S),
    )

    # x[g, h] - a[g, h] z[g] <= 0
    cap_rows = np.arange(G * S)
    b.add_constraints(
        "capacity",
        "ub",
        rows=np.concatenate([cap_rows, cap_rows]),
        cols=np.concatenate([x.ravel(), np.repeat(z, S)]),
        vals=np.concatenate([np.ones(G * S), -availability.ravel()]),
        rhs=np.zeros(G * S),
    )

    # |r| <= t as two rows
    b.add_constraints(
        "charge",
        "ub",
        rows=np.concatenate([periods, periods]),
        cols=np.concatenate([r, np.full(S, t)]),
        vals=np.concatenate([np.ones(S), -np.ones(S)]),
        rhs=np.zeros(S),
    )
    b.add_constraints(
        "discharge",
        "ub",
        rows=np.concatenate([periods, periods]),
        cols=np.concatenate([r, np.full(S, t)]),
        vals=np.concatenate([-np.ones(S), -np.ones(S)]),
        rhs=np.zeros(S),
    )

    # s <= u
    b.add_constraints(
        "room",
        "ub",
        rows=np.concatenate([periods, periods]),
        cols=np.concatenate([s, np.full(S, u)]),
        vals=np.concatenate([np.ones(S), -np.ones(S)]),
        rhs=np.zeros(S),
    )
    return b.build()


def build_core_lp(instance: SystemInstance, with_storage: bool = True) -> LinearProgram:
    return build_planning_lp(
        demand=instance.demand,
        availability=instance.availability_matrix(),
        var_cost=instance.var_cost_matrix(),
        cap_cost=instance.cap_costs(),
        storage=instance.storage,
        inflow=hourly_inflow(instance.n_hours, instance.grid.cyclic),
        with_storage=with_storage,
    )


@dataclass
class PlanningSolution:
    """Primal/dual arrays of a planning LP, already mapped to domain signs."""

    x: np.ndarray
    z: np.ndarray
    t: float
    u: float
    r: np.ndarray
    s: np.ndarray
    lambda_: np.ndarray
    rho: np.ndarray
    omega: np.ndarray
    delta_c: np.ndarray
    delta_d: np.ndarray
    tau: np.ndarray
    objective: float
    seconds: float


def unpack_solution(
    lp: LinearProgram, sol: LpSolution, shape: tuple[int, int]
) -> PlanningSolution:
    """Map LP marginals (d obj / d rhs) to the non-negative rents of the model."""
    G, S = shape
    v = lp.var_blocks
    eq, ub = lp.eq_blocks, lp.ub_blocks
    m_eq, m_ub = sol.eq_marginals, sol.ub_marginals
    return PlanningSolution(
        x=sol.x[v["x"]].reshape(G, S),
        z=sol.x[v["z"]],
        t=float(sol.x[v["t"][0]]),
        u=float(sol.x[v["u"][0]]),
        r=sol.x[v["r"]],
        s=sol.x[v["s"]],
        lambda_=m_eq[eq["demand"]],
        omega=-m_eq[eq["balance"]],
        rho=-m_ub[ub["capacity"]].reshape(G, S),
        delta_c=-m_ub[ub["charge"]],
        delta_d=-m_ub[ub["discharge"]],
        tau=-m_ub[ub["room"]],
        objective=sol.objective,
        seconds=sol.seconds,
    )


def check_duality_gap(sol: LpSolution, label: str) -> None:
    eps_gap: float = get_app_config().eps_gap
    limit: float = eps_gap * (1.0 + abs(sol.objective))
    if sol.duality_gap > limit:
        raise NumericalFailure(
            f"{label}: duality gap {sol.duality_gap:.3e} exceeds {limit:.3e}"
        )


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------
def solve_core(
    instance: SystemInstance,
    solver: LpSolver | None = None,
    with_storage: bool = True,
) -> SolveResult:
    """Solve the hourly planning LP; ``with_storage=False`` pins t = u = s = 0."""
    solver = solver or default_solver()
    lp = build_core_lp(instance, with_storage=with_storage)
    logger.info(
        "solve_core started",
        hours=instance.n_hours,
        generators=instance.n_generators,
        cyclic=instance.grid.cyclic,
        backend=solver.name,
    )
    sol = solver.solve(lp)
    check_duality_gap(sol, "solve_core")
    p = unpack_solution(lp, sol, (instance.n_generators, instance.n_hours))
    logger.info("solve_core finished", objective=p.objective, t=p.t, u=p.u, seconds=p.seconds)
    return SolveResult(
        x=p.x,
        z=p.z,
        t=p.t,
        u=p.u,
        r=p.r,
        s=p.s,
        lambda_=p.lambda_,
        rho=p.rho,
        omega=p.omega,
        delta_c=p.delta_c,
        delta_d=p.delta_d,
        tau=p.tau,
        objective=p.objective,
        solve_seconds=p.seconds,
        meta={
            "backend": sol.backend,
            "duality_gap": sol.duality_gap,
            "cyclic": instance.grid.cyclic,
        },
    )


# ---------------------------------------------------------------------------
# KKT audit
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class KktViolation:
    condition: str  # e.g. "storage_balance", "tau_sign", "stationarity_x"
    kind: str  # primal | dual | complementarity | stationarity
    index: tuple[int, ...]
    magnitude: float


@dataclass
class KktReport:
    violations: list[KktViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_violation(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)

    def by_condition(self, condition: str) -> list[KktViolation]:
        return [v for v in self.violations if v.condition == condition]

    def conditions(self) -> set[str]:
        return {v.condition for v in self.violations}


class _Collector:
    def __init__(self, report: KktReport) -> None:
        self.report = report

    def add(self, condition: str, kind: str, values: np.ndarray, threshold: float) -> None:
        values = np.atleast_1d(np.asarray(values, dtype=float))
        for idx in zip(*np.nonzero(values > threshold), strict=True):
            self.report.violations.append(
                KktViolation(condition, kind, tuple(int(i) for i in idx), float(values[idx]))
            )


def _check_shapes(instance: SystemInstance, result: SolveResult) -> None:
    G, n = instance.n_generators, instance.n_hours
    expected = {
        "x": (G, n),
        "rho": (G, n),
        "z": (G,),
        "r": (n,),
        "s": (n,),
        "lambda_": (n,),
        "omega": (n,),
        "delta_c": (n,),
        "delta_d": (n,),
        "tau": (n,),
    }
    for name, shape in expected.items():
        actual = np.shape(getattr(result, name))
        if actual != shape:
            raise DimensionMismatch(f"result.{name} has shape {actual}, expected {shape}")


def audit_kkt(
    instance: SystemInstance, result: SolveResult, eps: float | None = None
) -> KktReport:
    """Primal/dual feasibility, complementary slackness and Lagrangian stationarity.

    Magnitudes are reported raw; a condition is violated when it exceeds
    ``eps`` times the data scale of its class (demand scale for primal rows,
    cost scale for dual rows, their product for complementarity).
    """
    _check_shapes(instance, result)
    eps = get_app_config().eps_kkt if eps is None else eps

    a = instance.availability_matrix()
    c = instance.var_cost_matrix()
    cz = instance.cap_costs()
    ct, cu = instance.storage.door_cost, instance.storage.room_cost
    d = instance.demand
    x, z, t, u, r, s = result.x, result.z, result.t, result.u, result.r, result.s
    lam, rho, om = result.lambda_, result.rho, result.omega
    dc, dd, tau = result.delta_c, result.delta_d, result.tau

    q_scale = max(1.0, float(np.max(np.abs(d), initial=0.0)))
    c_scale = max(1.0, float(np.max(np.abs(c), initial=0.0)), ct, cu, float(cz.max(initial=0.0)))
    p_tol, d_tol, cs_tol = eps * q_scale, eps * c_scale, eps * q_scale * c_scale

    report = KktReport()
    col = _Collector(report)

    s_prev = np.roll(s, 1) if instance.grid.cyclic else np.concatenate([[0.0], s[:-1]])
    om_next = np.roll(om, -1) if instance.grid.cyclic else np.concatenate([om[1:], [0.0]])

    # primal feasibility
    col.add("demand_balance", "primal", np.abs(x.sum(axis=0) - r - d), p_tol)
    col.add("storage_balance", "primal", np.abs(s - s_prev - r), p_tol)
    col.add("capacity", "primal", x - a * z[:, None], p_tol)
    col.add("charge_limit", "primal", r - t, p_tol)
    col.add("discharge_limit", "primal", -r - t, p_tol)
    col.add("room_limit", "primal", s - u, p_tol)
    col.add("x_sign", "primal", -x, p_tol)
    col.add("z_sign", "primal", -z, p_tol)
    col.add("t_sign", "primal", np.array([-t]), p_tol)
    col.add("u_sign", "primal", np.array([-u]), p_tol)
    col.add("s_sign", "primal", -s, p_tol)

    # dual feasibility
    col.add("rho_sign", "dual", -rho, d_tol)
    col.add("delta_c_sign", "dual", -dc, d_tol)
    col.add("delta_d_sign", "dual", -dd, d_tol)
    col.add("tau_sign", "dual", -tau, d_tol)

    # complementary slackness
    col.add("capacity_slackness", "complementarity", np.abs(rho * (a * z[:, None] - x)), cs_tol)
    col.add("charge_slackness", "complementarity", np.abs(dc * (t - r)), cs_tol)
    col.add("discharge_slackness", "complementarity", np.abs(dd * (t + r)), cs_tol)
    col.add("room_slackness", "complementarity", np.abs(tau * (u - s)), cs_tol)

    # stationarity: reduced cost beta >= 0 with beta * var = 0; r is free
    beta_x = c - lam[None, :] + rho
    beta_z = cz - (a * rho).sum(axis=1)
    beta_t = ct - float((dc + dd).sum())
    beta_u = cu - float(tau.sum())
    beta_s = om - om_next + tau
    for name, beta, var in (
        ("x", beta_x, x),
        ("z", beta_z, z),
        ("t", np.array([beta_t]), np.array([t])),
        ("u", np.array([beta_u]), np.array([u])),
        ("s", beta_s, s),
    ):
        col.add(f"stationarity_{name}", "stationarity", -beta, d_tol)
        col.add(f"stationarity_{name}_slackness", "stationarity", np.abs(beta * var), cs_tol)
    col.add("stationarity_r", "stationarity", np.abs(lam - om + dc - dd), d_tol)

    if report.ok:
        logger.debug("audit_kkt clean", hours=instance.n_hours)
    else:
        logger.info(
            "audit_kkt found violations",
            count=len(report.violations),
            conditions=",".join(sorted(report.conditions())),
            worst=report.max_violation,
        )
    return report
