"""Sharing-form ADMM for the hourly planning LP.

One capacity block holds (z, t, u); each dispatch block holds (x, r, s) for
a chunk of hours. The capacity limits and the state of charge carried
between chunks are the linking rows, all written as equalities with zero
right-hand side (slacks live in the dispatch blocks)::

    x_{g,h} + sig_{g,h} - a_{g,h} z_g = 0
     r_h + sig_c_h - t = 0,   -r_h + sig_d_h - t = 0
     s_h + sig_u_h - u = 0
     s_in(i+1) - s_last(i) = 0

Per iteration every block minimizes
``f_i(x_i) - alpha . (A_i x_i - y_i) + beta/2 ||A_i x_i - y_i||^2``;
the coordinator then projects the block outputs onto ``sum_i y_i = b`` by
sharing each row's residual equally among the blocks in that row, and moves
``alpha_j <- alpha_j - beta * residual_j / N_j``.

The rents of the hourly model are read off the linking multipliers
(rho = -alpha and likewise for delta and tau); lambda and omega come from
the dispatch blocks' own balance rows.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
import pandas as pd

from backend.src.config import get_app_config
from backend.src.models.domain import SolveResult, SystemInstance
from backend.src.processors.model_core import solve_core
from backend.src.solvers.lp import CVXPY_COMPILE_LOCK
from backend.src.utils.constants import (
    ADMM_BALANCE_FACTOR,
    ADMM_BALANCE_RATIO,
    DEFAULT_ADMM,
    HOURS_PER_DAY,
    HOURS_PER_WEEK,
)
from backend.src.utils.errors import (
    IndivisibleHorizon,
    InvalidParameter,
    MaxItersExceeded,
    NumericalFailure,
)
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)

CHUNK_HOURS: dict[str, int] = {"hour": 1, "day": HOURS_PER_DAY, "week": HOURS_PER_WEEK}
PARTITIONS: tuple[str, ...] = (*CHUNK_HOURS, "single")


def normalize_partition(scheme: str) -> str:
    name = scheme.removeprefix("per-")
    if name not in PARTITIONS:
        raise InvalidParameter(f"partition must be one of {PARTITIONS}, got {scheme!r}")
    return name


@dataclass(frozen=True)
class AdmmConfig:
    beta: float = DEFAULT_ADMM["beta"]
    max_iters: int = DEFAULT_ADMM["max_iters"]
    eps_primal: float = DEFAULT_ADMM["eps_primal"]
    eps_dual: float = DEFAULT_ADMM["eps_dual"]
    partition: str = DEFAULT_ADMM["partition"]
    adaptive_penalty: bool = False
    workers: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "partition", normalize_partition(self.partition))
        if self.beta <= 0:
            raise InvalidParameter(f"beta must be > 0, got {self.beta}")
        if self.eps_primal <= 0 or self.eps_dual <= 0:
            raise InvalidParameter("residual tolerances must be > 0")
        if self.max_iters < 1:
            raise InvalidParameter("max_iters must be >= 1")


@dataclass(frozen=True)
class AdmmIteration:
    iter: int
    primal_residual: float
    dual_residual: float
    objective: float
    beta: float
    wall_time: float
    block_seconds: float


@dataclass
class AdmmTrace:
    records: list[AdmmIteration] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final(self) -> AdmmIteration | None:
        return self.records[-1] if self.records else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [r.__dict__ for r in self.records],
            columns=[
                "iter",
                "primal_residual",
                "dual_residual",
                "objective",
                "beta",
                "wall_time",
                "block_seconds",
            ],
        )


# ---------------------------------------------------------------------------
# Block structure
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DispatchBlock:
    index: int
    hours: np.ndarray
    receives_link: int | None  # SOC link row entering this chunk
    sends_link: int | None  # SOC link row leaving this chunk
    wraps: bool  # single chunk on a cyclic grid closes its own balance


@dataclass(frozen=True)
class BlockStructure:
    """Row layout: capacity (G*n, g-major), charge (n), discharge (n), room (n), links."""

    scheme: str
    n_hours: int
    n_generators: int
    dispatch: tuple[DispatchBlock, ...]
    n_links: int

    @property
    def n_blocks(self) -> int:
        if self.scheme == "single":
            return 1
        return len(self.dispatch) + 1

    @property
    def n_rows(self) -> int:
        if self.scheme == "single":
            return 0
        return (self.n_generators + 3) * self.n_hours + self.n_links

    @property
    def capacity_rows(self) -> slice:
        return slice(0, self.n_generators * self.n_hours)

    @property
    def charge_rows(self) -> slice:
        start = self.n_generators * self.n_hours
        return slice(start, start + self.n_hours)

    @property
    def discharge_rows(self) -> slice:
        start = (self.n_generators + 1) * self.n_hours
        return slice(start, start + self.n_hours)

    @property
    def room_rows(self) -> slice:
        start = (self.n_generators + 2) * self.n_hours
        return slice(start, start + self.n_hours)

    @property
    def link_rows(self) -> slice:
        start = (self.n_generators + 3) * self.n_hours
        return slice(start, start + self.n_links)


def partition_blocks(instance: SystemInstance, scheme: str) -> BlockStructure:
    """Capacity block plus one dispatch block per chunk of ``scheme`` hours."""
    scheme = normalize_partition(scheme)
    n: int = instance.n_hours
    cyclic: bool = instance.grid.cyclic
    if scheme == "single":
        only = DispatchBlock(0, np.arange(n), None, None, cyclic)
        return BlockStructure(scheme, n, instance.n_generators, (only,), 0)

    chunk: int = CHUNK_HOURS[scheme]
    if n % chunk:
        raise IndivisibleHorizon(f"{n} hours do not split into {scheme} chunks of {chunk}")
    n_chunks: int = n // chunk
    if n_chunks == 1:
        only = DispatchBlock(0, np.arange(n), None, None, cyclic)
        return BlockStructure(scheme, n, instance.n_generators, (only,), 0)

    # link k-1 joins chunk k-1 (sender) to chunk k (receiver); the last link wraps when cyclic
    links: list[tuple[int, int]] = [(k - 1, k) for k in range(1, n_chunks)]
    if cyclic:
        links.append((n_chunks - 1, 0))
    receives = {dst: j for j, (_, dst) in enumerate(links)}
    sends = {src: j for j, (src, _) in enumerate(links)}
    blocks = tuple(
        DispatchBlock(
            index=i,
            hours=np.arange(i * chunk, (i + 1) * chunk),
            receives_link=receives.get(i),
            sends_link=sends.get(i),
            wraps=False,
        )
        for i in range(n_chunks)
    )
    return BlockStructure(scheme, n, instance.n_generators, blocks, len(links))


# ---------------------------------------------------------------------------
# Subproblems
# ---------------------------------------------------------------------------
@dataclass
class DispatchOutput:
    v: np.ndarray
    x: np.ndarray
    r: np.ndarray
    s: np.ndarray
    lambda_: np.ndarray
    omega: np.ndarray
    cost: float
    seconds: float


class DispatchSubproblem:
    """Penalized dispatch QP for one chunk, compiled once with cvxpy parameters.

    ``beta/2 ||v - y||^2 - alpha . v`` is expanded to
    ``beta/2 ||v||^2 - (alpha + beta*y) . v`` so the problem stays DPP.
    """

    def __init__(
        self, block: DispatchBlock, instance: SystemInstance, structure: BlockStructure
    ) -> None:
        self.block = block
        self.solver: str = get_app_config().qp_solver
        hours = block.hours
        n, G, L = structure.n_hours, instance.n_generators, hours.shape[0]
        cost = instance.var_cost_matrix()[:, hours]

        self.x = cp.Variable((G, L), nonneg=True)
        self.r = cp.Variable(L)
        self.s = cp.Variable(L, nonneg=True)
        sig_cap = cp.Variable((G, L), nonneg=True)
        sig_c = cp.Variable(L, nonneg=True)
        sig_d = cp.Variable(L, nonneg=True)
        sig_u = cp.Variable(L, nonneg=True)

        parts: list[cp.Expression] = [self.x[g] + sig_cap[g] for g in range(G)]
        parts += [self.r + sig_c, -self.r + sig_d, self.s + sig_u]
        rows: list[np.ndarray] = [g * n + hours for g in range(G)]
        rows += [
            structure.charge_rows.start + hours,
            structure.discharge_rows.start + hours,
            structure.room_rows.start + hours,
        ]

        s_in: cp.Expression | float
        if block.receives_link is not None:
            s_in_var = cp.Variable(nonneg=True)
            parts.append(cp.reshape(s_in_var, (1,)))
            rows.append(np.array([structure.link_rows.start + block.receives_link]))
            s_in = s_in_var
        elif block.wraps:
            s_in = self.s[L - 1]
        else:
            s_in = 0.0
        if block.sends_link is not None:
            parts.append(cp.reshape(-self.s[L - 1], (1,)))
            rows.append(np.array([structure.link_rows.start + block.sends_link]))

        self.rows: np.ndarray = np.concatenate(rows)
        v = cp.hstack(parts)
        self.v = v
        self.linear = cp.Parameter(self.rows.shape[0])
        self.beta = cp.Parameter(nonneg=True)
        self.cost_expr = cp.sum(cp.multiply(cost, self.x))

        self.demand = cp.sum(self.x, axis=0) - self.r == instance.demand[hours]
        self.balance_first = self.s[0] - s_in - self.r[0] == 0
        constraints = [self.demand, self.balance_first]
        self.balance_rest = None
        if L > 1:
            self.balance_rest = self.s[1:] - self.s[:-1] - self.r[1:] == 0
            constraints.append(self.balance_rest)

        objective = self.cost_expr - self.linear @ v + self.beta / 2 * cp.sum_squares(v)
        self.problem = cp.Problem(cp.Minimize(objective), constraints)
        self._compile()

    def _compile(self) -> None:
        """Canonicalize once, serially; later solves only refill parameters."""
        self.linear.value = np.zeros(self.rows.shape[0])
        self.beta.value = 1.0
        with CVXPY_COMPILE_LOCK:
            try:
                self.problem.get_problem_data(self.solver)
            except (cp.DCPError, cp.SolverError) as e:
                raise NumericalFailure(f"dispatch block {self.block.index}: {e}") from e

    def solve(self, linear: np.ndarray, beta: float) -> DispatchOutput:
        start = time.perf_counter()
        self.linear.value = linear
        self.beta.value = beta
        try:
            self.problem.solve(solver=self.solver, warm_start=True)
        except (cp.DCPError, cp.SolverError) as e:
            raise NumericalFailure(f"dispatch block {self.block.index}: {e}") from e
        if self.problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise NumericalFailure(
                f"dispatch block {self.block.index} returned status {self.problem.status}"
            )
        # cvxpy equality duals y enter the Lagrangian as + y (lhs - rhs)
        omega_first = np.atleast_1d(self.balance_first.dual_value).astype(float)
        omega = omega_first
        if self.balance_rest is not None:
            omega = np.concatenate([omega_first, np.asarray(self.balance_rest.dual_value, float)])
        return DispatchOutput(
            v=np.asarray(self.v.value, dtype=float),
            x=np.asarray(self.x.value, dtype=float),
            r=np.asarray(self.r.value, dtype=float),
            s=np.asarray(self.s.value, dtype=float),
            lambda_=-np.asarray(self.demand.dual_value, dtype=float),
            omega=omega,
            cost=float(self.cost_expr.value),
            seconds=time.perf_counter() - start,
        )


class CapacitySubproblem:
    """Closed-form minimizer of the capacity block (separable clipped quadratics)."""

    def __init__(self, instance: SystemInstance, structure: BlockStructure) -> None:
        self.structure = structure
        self.a: np.ndarray = instance.availability_matrix()  # (G, n)
        self.cz: np.ndarray = instance.cap_costs()
        self.ct: float = instance.storage.door_cost
        self.cu: float = instance.storage.room_cost
        st = structure
        self.rows: np.ndarray = np.arange(st.room_rows.stop)

    @staticmethod
    def _clipped(linear: np.ndarray, quad: np.ndarray) -> np.ndarray:
        safe = np.where(quad > 0, quad, 1.0)
        return np.where(quad > 0, np.maximum(0.0, -linear / safe), 0.0)

    def solve(
        self, alpha: np.ndarray, y: np.ndarray, beta: float
    ) -> tuple[np.ndarray, np.ndarray, float, float]:
        st = self.structure
        G, n = self.a.shape
        a = self.a
        # z_g appears as -a_gh z_g in every capacity row of generator g
        alpha_cap = alpha[st.capacity_rows].reshape(G, n)
        y_cap = y[st.capacity_rows].reshape(G, n)
        z = self._clipped(
            self.cz + (alpha_cap * a).sum(axis=1) + beta * (a * y_cap).sum(axis=1),
            beta * (a * a).sum(axis=1),
        )
        door_rows = np.r_[st.charge_rows.start : st.discharge_rows.stop]
        t = float(
            self._clipped(
                np.array([self.ct + alpha[door_rows].sum() + beta * y[door_rows].sum()]),
                np.array([beta * door_rows.shape[0]]),
            )[0]
        )
        room = st.room_rows
        u = float(
            self._clipped(
                np.array([self.cu + alpha[room].sum() + beta * y[room].sum()]),
                np.array([beta * n]),
            )[0]
        )
        v = np.concatenate([(-a * z[:, None]).ravel(), np.full(2 * n, -t), np.full(n, -u)])
        return v, z, t, u

    def cost(self, z: np.ndarray, t: float, u: float) -> float:
        return float(self.cz @ z + self.ct * t + self.cu * u)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------
def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(values)))) if values.size else 0.0


def _solve_single(instance: SystemInstance) -> tuple[SolveResult, AdmmTrace]:
    start = time.perf_counter()
    result = solve_core(instance)
    elapsed = time.perf_counter() - start
    trace = AdmmTrace(
        records=[AdmmIteration(1, 0.0, 0.0, result.objective, 0.0, elapsed, result.solve_seconds)],
        converged=True,
    )
    result.meta.update({"backend": "admm:single", "iterations": 1, "converged": True})
    return result, trace


def _assemble(
    instance: SystemInstance,
    structure: BlockStructure,
    outputs: list[DispatchOutput],
    capacity: tuple[np.ndarray, float, float],
    alpha: np.ndarray,
    objective: float,
) -> SolveResult:
    G, n = instance.n_generators, instance.n_hours
    x = np.zeros((G, n))
    r, s, lam, om = (np.zeros(n) for _ in range(4))
    for block, out in zip(structure.dispatch, outputs, strict=True):
        h = block.hours
        x[:, h], r[h], s[h] = out.x, out.r, out.s
        lam[h], om[h] = out.lambda_, out.omega
    z, t, u = capacity
    return SolveResult(
        x=x,
        z=z,
        t=t,
        u=u,
        r=r,
        s=s,
        lambda_=lam,
        rho=-alpha[structure.capacity_rows].reshape(G, n),
        omega=om,
        delta_c=-alpha[structure.charge_rows],
        delta_d=-alpha[structure.discharge_rows],
        tau=-alpha[structure.room_rows],
        objective=objective,
        meta={"backend": "admm", "partition": structure.scheme, "cyclic": instance.grid.cyclic},
    )


def admm_solve(
    instance: SystemInstance, cfg: AdmmConfig | None = None
) -> tuple[SolveResult, AdmmTrace]:
    """Decomposed solve; raises MaxItersExceeded carrying the best iterate and trace."""
    cfg = cfg or AdmmConfig()
    structure = partition_blocks(instance, cfg.partition)
    if structure.scheme == "single":
        return _solve_single(instance)

    app_cfg = get_app_config()
    workers: int = cfg.workers or app_cfg.admm_workers
    subproblems = [DispatchSubproblem(b, instance, structure) for b in structure.dispatch]
    capacity = CapacitySubproblem(instance, structure)

    m: int = structure.n_rows
    share: np.ndarray = np.full(m, 2.0)  # every linking row joins exactly two blocks
    alpha: np.ndarray = np.zeros(m)
    y_blocks: list[np.ndarray] = [np.zeros(sp.rows.shape[0]) for sp in subproblems]
    y_cap: np.ndarray = np.zeros(capacity.rows.shape[0])
    beta: float = cfg.beta

    logger.info(
        "admm started",
        hours=instance.n_hours,
        partition=structure.scheme,
        blocks=structure.n_blocks,
        rows=m,
        beta=beta,
    )
    trace = AdmmTrace()
    best: SolveResult | None = None
    best_score: float = np.inf
    start = time.perf_counter()

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for k in range(1, cfg.max_iters + 1):
            futures = [
                pool.submit(sp.solve, alpha[sp.rows] + beta * y, beta)
                for sp, y in zip(subproblems, y_blocks, strict=True)
            ]
            v_cap, z, t, u = capacity.solve(alpha[capacity.rows], y_cap, beta)
            outputs = [f.result() for f in futures]

            residual = np.zeros(m)
            for sp, out in zip(subproblems, outputs, strict=True):
                np.add.at(residual, sp.rows, out.v)
            residual[capacity.rows] += v_cap

            new_y_blocks = [
                out.v - residual[sp.rows] / share[sp.rows]
                for sp, out in zip(subproblems, outputs, strict=True)
            ]
            new_y_cap = v_cap - residual[capacity.rows] / share[capacity.rows]
            dy = np.concatenate([*(n - o for n, o in zip(new_y_blocks, y_blocks, strict=True)),
                                 new_y_cap - y_cap])
            y_blocks, y_cap = new_y_blocks, new_y_cap
            alpha = alpha - beta * residual / share

            primal: float = _rms(residual)
            dual: float = beta * _rms(dy)
            objective: float = sum(o.cost for o in outputs) + capacity.cost(z, t, u)
            trace.records.append(
                AdmmIteration(
                    iter=k,
                    primal_residual=primal,
                    dual_residual=dual,
                    objective=objective,
                    beta=beta,
                    wall_time=time.perf_counter() - start,
                    block_seconds=max(o.seconds for o in outputs),
                )
            )
            logger.debug("admm iteration", iter=k, primal=primal, dual=dual, objective=objective)

            score = max(primal, dual)
            if score < best_score or k == 1:
                best_score = score
                best = _assemble(instance, structure, outputs, (z, t, u), alpha, objective)

            if primal <= cfg.eps_primal and dual <= cfg.eps_dual:
                trace.converged = True
                break

            if cfg.adaptive_penalty:
                if primal > ADMM_BALANCE_RATIO * dual:
                    beta *= ADMM_BALANCE_FACTOR
                elif dual > ADMM_BALANCE_RATIO * primal:
                    beta /= ADMM_BALANCE_FACTOR

    final = _assemble(instance, structure, outputs, (z, t, u), alpha, objective)
    final.solve_seconds = time.perf_counter() - start
    final.meta.update({"iterations": trace.iterations, "converged": trace.converged, "beta": beta})
    if not trace.converged:
        assert best is not None
        best.solve_seconds = final.solve_seconds
        best.meta.update({"iterations": trace.iterations, "converged": False, "beta": beta})
        logger.warning(
            "admm hit max_iters",
            iterations=trace.iterations,
            primal=trace.final.primal_residual,
            dual=trace.final.dual_residual,
        )
        raise MaxItersExceeded(
            f"ADMM did not converge in {cfg.max_iters} iterations", result=best, trace=trace
        )
    logger.info(
        "admm converged",
        iterations=trace.iterations,
        objective=final.objective,
        seconds=final.solve_seconds,
    )
    return final, trace
