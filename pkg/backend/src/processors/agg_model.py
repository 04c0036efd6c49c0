"""Aggregated planning LP over states and its expansion back to hours.

    min  sum_s w_s sum_g c^x_{g,s} x_{g,s} + c^z . z + c^t t + c^u u
    s.t. sum_g x_{g,s} - r_s = d_s
         x_{g,s} <= a_{g,s} z_g
         s_j = sum_i P_ij s_i + q_j r_j
         |r_s| <= t,  s_s <= u

With w = q = 1 and P the shifted identity this is the hourly model.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from backend.src.config import get_app_config
from backend.src.models.domain import (
    AggSolveResult,
    Aggregation,
    SolveResult,
    StateProfiles,
    SystemInstance,
)
from backend.src.processors.aggregation import state_runs
from backend.src.processors.model_core import build_planning_lp, check_duality_gap, unpack_solution
from backend.src.processors.valuation import IdentityCheck
from backend.src.solvers.lp import LpSolver, default_solver
from backend.src.utils.errors import DimensionMismatch
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)


def state_profiles(instance: SystemInstance, agg: Aggregation) -> StateProfiles:
    """The aggregation's own profiles, or per-state means when it carries none."""
    p = agg.profiles
    if p.availability.shape == (instance.n_generators, agg.n_states):
        return p
    return StateProfiles.from_hours(instance, agg.gamma, agg.n_states)


def solve_aggregated(
    instance: SystemInstance, agg: Aggregation, solver: LpSolver | None = None
) -> AggSolveResult:
    if agg.n_hours != instance.n_hours:
        raise DimensionMismatch(
            f"aggregation covers {agg.n_hours} hours, instance has {instance.n_hours}"
        )
    agg.validate()
    solver = solver or default_solver()
    profiles = state_profiles(instance, agg)
    lp = build_planning_lp(
        demand=profiles.demand,
        availability=profiles.availability,
        var_cost=profiles.var_cost,
        cap_cost=instance.cap_costs(),
        storage=instance.storage,
        inflow=sp.csr_matrix(agg.transition.T),
        weight=agg.w,
        duration=agg.q,
    )
    logger.info(
        "solve_aggregated started",
        method=agg.method,
        states=agg.n_states,
        hours=agg.n_hours,
        backend=solver.name,
    )
    sol = solver.solve(lp)
    check_duality_gap(sol, "solve_aggregated")
    p = unpack_solution(lp, sol, (instance.n_generators, agg.n_states))
    logger.info("solve_aggregated finished", objective=p.objective, t=p.t, u=p.u)
    return AggSolveResult(
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
    )


def _accumulate_soc(
    r: np.ndarray, anchor_hour: int, anchor_value: float, cyclic: bool
) -> np.ndarray:
    """s_h = s_{h-1} + r_h, pinned to ``anchor_value`` at ``anchor_hour`` when cyclic."""
    if not cyclic:
        return np.cumsum(r)
    n: int = r.shape[0]
    order: np.ndarray = (anchor_hour + np.arange(n)) % n
    s: np.ndarray = np.empty(n)
    s[order] = anchor_value + np.concatenate([[0.0], np.cumsum(r[order[1:]])])
    return s


def expand_solution(agg_res: AggSolveResult, agg: Aggregation) -> SolveResult:
    """Map a state-level solution onto hours.

    Prices are re-expressed per hour: lambda, rho and delta are divided by
    w_s, omega becomes q_s * omega_s / w_s, and tau_s is shared equally by
    the hours that close a visit to s.
    """
    S: int = agg.n_states
    if agg_res.n_states != S or np.shape(agg_res.x)[1] != S:
        raise DimensionMismatch(
            f"result has {agg_res.n_states} states, aggregation has {S}"
        )
    gamma: np.ndarray = agg.gamma
    n: int = agg.n_hours
    w: np.ndarray = np.where(agg.w > 0, agg.w, 1.0)

    run_states, run_starts, run_lengths = state_runs(gamma, agg.cyclic)
    run_ends: np.ndarray = (run_starts + run_lengths - 1) % n
    ends_per_state: np.ndarray = np.bincount(run_states, minlength=S).astype(float)
    tau: np.ndarray = np.zeros(n)
    tau[run_ends] = agg_res.tau[run_states] / ends_per_state[run_states]

    r: np.ndarray = agg_res.r[gamma]
    anchor: int = int(run_ends[0])
    s: np.ndarray = _accumulate_soc(r, anchor, float(agg_res.s[gamma[anchor]]), agg.cyclic)

    return SolveResult(
        x=agg_res.x[:, gamma],
        z=np.array(agg_res.z, copy=True),
        t=agg_res.t,
        u=agg_res.u,
        r=r,
        s=s,
        lambda_=(agg_res.lambda_ / w)[gamma],
        rho=(agg_res.rho / w[None, :])[:, gamma],
        omega=(agg.q * agg_res.omega / w)[gamma],
        delta_c=(agg_res.delta_c / w)[gamma],
        delta_d=(agg_res.delta_d / w)[gamma],
        tau=tau,
        objective=agg_res.objective,
        solve_seconds=agg_res.solve_seconds,
        meta={"aggregation": agg.method, "cyclic": agg.cyclic, "states": S},
    )


def aggregated_room_identity(
    agg_res: AggSolveResult, agg: Aggregation, instance: SystemInstance
) -> IdentityCheck:
    """c^u = sum_s (p_s . omega - omega_s)^+, asserted when u > 0."""
    cfg = get_app_config()
    om: np.ndarray = agg_res.omega
    lhs: float = float(np.sum(np.maximum(agg.transition @ om - om, 0.0)))
    storage = instance.storage
    return IdentityCheck(
        name="aggregated_room",
        lhs=lhs,
        rhs=storage.room_cost,
        tolerance=cfg.eps_id * max(1.0, storage.room_cost, storage.door_cost),
        asserted=agg_res.u > cfg.eps_feas,
    )


def room_identity_residual(
    agg_res: AggSolveResult, agg: Aggregation, instance: SystemInstance
) -> float:
    return aggregated_room_identity(agg_res, agg, instance).residual
