"""Sparse linear programs in triplet form and the pluggable solver backends.

A ``LinearProgram`` is::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lower <= x <= upper

Solvers return marginals as d(objective)/d(rhs), as scipy/HiGHS
reports them, so callers turn them into domain duals with one sign flip
per row block.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from backend.src.config import get_app_config
from backend.src.utils.errors import InfeasibleError, NumericalFailure, UnboundedError
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)

# cvxpy canonicalization (DPP scope, cached problem data) is process-global state
CVXPY_COMPILE_LOCK = threading.Lock()


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_blocks: dict[str, np.ndarray] = field(default_factory=dict)
    eq_blocks: dict[str, slice] = field(default_factory=dict)
    ub_blocks: dict[str, slice] = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return int(self.c.shape[0])


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    eq_marginals: np.ndarray
    ub_marginals: np.ndarray
    lower_marginals: np.ndarray
    upper_marginals: np.ndarray
    dual_objective: float
    seconds: float
    backend: str

    @property
    def duality_gap(self) -> float:
        return abs(self.objective - self.dual_objective)


class LpBuilder:
    """Incrementally collects variables and constraint triplets."""

    def __init__(self) -> None:
        self._n_vars: int = 0
        self._costs: list[np.ndarray] = []
        self._lower: list[np.ndarray] = []
        self._upper: list[np.ndarray] = []
        self._var_blocks: dict[str, np.ndarray] = {}
        self._rows: dict[str, list[np.ndarray]] = {"eq": [], "ub": []}
        self._cols: dict[str, list[np.ndarray]] = {"eq": [], "ub": []}
        self._vals: dict[str, list[np.ndarray]] = {"eq": [], "ub": []}
        self._rhs: dict[str, list[np.ndarray]] = {"eq": [], "ub": []}
        self._n_rows: dict[str, int] = {"eq": 0, "ub": 0}
        self._row_blocks: dict[str, dict[str, slice]] = {"eq": {}, "ub": {}}

    def add_variables(
        self,
        name: str,
        shape: int | tuple[int, ...],
        lower: float | np.ndarray = 0.0,
        upper: float | np.ndarray = np.inf,
        cost: float | np.ndarray = 0.0,
    ) -> np.ndarray:
        """Register a variable array; returns its column indices with ``shape``."""
        size: int = int(np.prod(shape))
        idx: np.ndarray = np.arange(self._n_vars, self._n_vars + size).reshape(shape)
        self._n_vars += size
        self._costs.append(np.broadcast_to(np.asarray(cost, dtype=float), shape).ravel())
        self._lower.append(np.broadcast_to(np.asarray(lower, dtype=float), shape).ravel())
        self._upper.append(np.broadcast_to(np.asarray(upper, dtype=float), shape).ravel())
        self._var_blocks[name] = idx
        return idx

    def add_constraints(
        self,
        name: str,
        kind: str,
        rows: np.ndarray,
        cols: np.ndarray,
        vals: np.ndarray,
        rhs: np.ndarray,
    ) -> slice:
        """Append a block of rows; ``rows`` are local (0..len(rhs)-1)."""
        if kind not in ("eq", "ub"):
            raise ValueError(f"kind must be 'eq' or 'ub', got {kind!r}")
        offset: int = self._n_rows[kind]
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self._rows[kind].append(np.asarray(rows, dtype=int).ravel() + offset)
        self._cols[kind].append(np.asarray(cols, dtype=int).ravel())
        self._vals[kind].append(np.asarray(vals, dtype=float).ravel())
        self._rhs[kind].append(rhs)
        self._n_rows[kind] += rhs.shape[0]
        block = slice(offset, offset + rhs.shape[0])
        self._row_blocks[kind][name] = block
        return block

    def _matrix(self, kind: str) -> tuple[sp.csr_matrix, np.ndarray]:
        m: int = self._n_rows[kind]
        if m == 0:
            return sp.csr_matrix((0, self._n_vars)), np.zeros(0)
        A = sp.coo_matrix(
            (
                np.concatenate(self._vals[kind]),
                (np.concatenate(self._rows[kind]), np.concatenate(self._cols[kind])),
            ),
            shape=(m, self._n_vars),
        ).tocsr()
        return A, np.concatenate(self._rhs[kind])

    def build(self) -> LinearProgram:
        A_ub, b_ub = self._matrix("ub")
        A_eq, b_eq = self._matrix("eq")
        return LinearProgram(
            c=np.concatenate(self._costs),
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            lower=np.concatenate(self._lower),
            upper=np.concatenate(self._upper),
            var_blocks=dict(self._var_blocks),
            eq_blocks=dict(self._row_blocks["eq"]),
            ub_blocks=dict(self._row_blocks["ub"]),
        )


class LpSolver(Protocol):
    name: str

    def solve(self, lp: LinearProgram) -> LpSolution: ...


def _dual_objective(lp: LinearProgram, m_eq, m_ub, m_lo, m_up) -> float:
    lo = np.where(np.isfinite(lp.lower), lp.lower, 0.0)
    up = np.where(np.isfinite(lp.upper), lp.upper, 0.0)
    return float(lp.b_eq @ m_eq + lp.b_ub @ m_ub + lo @ m_lo + up @ m_up)


class HighsLpSolver:
    """scipy.optimize.linprog with the HiGHS backend (dual simplex by default)."""

    name: str = "highs"

    def __init__(self, method: str | None = None, feasibility_tol: float | None = None) -> None:
        cfg = get_app_config()
        self.method: str = method or cfg.lp_method
        self.feasibility_tol: float = feasibility_tol or cfg.lp_feasibility_tol

    def solve(self, lp: LinearProgram) -> LpSolution:
        start: float = time.perf_counter()
        res = linprog(
            lp.c,
            A_ub=lp.A_ub if lp.A_ub.shape[0] else None,
            b_ub=lp.b_ub if lp.A_ub.shape[0] else None,
            A_eq=lp.A_eq if lp.A_eq.shape[0] else None,
            b_eq=lp.b_eq if lp.A_eq.shape[0] else None,
            bounds=np.column_stack((lp.lower, lp.upper)),
            method=self.method,
            options={
                "primal_feasibility_tolerance": self.feasibility_tol,
                "dual_feasibility_tolerance": self.feasibility_tol,
            },
        )
        seconds: float = time.perf_counter() - start

        if res.status == 2:
            raise InfeasibleError(f"LP infeasible: {res.message}")
        if res.status == 3:
            raise UnboundedError(f"LP unbounded (negative costs?): {res.message}")
        if res.status != 0:
            raise NumericalFailure(f"LP solver failed (status {res.status}): {res.message}")

        m_eq = np.asarray(res.eqlin.marginals) if lp.A_eq.shape[0] else np.zeros(0)
        m_ub = np.asarray(res.ineqlin.marginals) if lp.A_ub.shape[0] else np.zeros(0)
        m_lo = np.asarray(res.lower.marginals)
        m_up = np.asarray(res.upper.marginals)
        return LpSolution(
            x=np.asarray(res.x),
            objective=float(res.fun),
            eq_marginals=m_eq,
            ub_marginals=m_ub,
            lower_marginals=m_lo,
            upper_marginals=m_up,
            dual_objective=_dual_objective(lp, m_eq, m_ub, m_lo, m_up),
            seconds=seconds,
            backend=f"{self.name}:{self.method}",
        )


class CvxpyLpSolver:
    """Independent backend through cvxpy's modelling layer (test oracle).

    cvxpy reports the Lagrangian ``f + y @ (lhs - rhs)``, so marginals are
    ``-y``. Bound marginals are not recovered.
    """

    name: str = "cvxpy"

    def __init__(self, solver: str | None = None) -> None:
        self.solver: str | None = solver

    def solve(self, lp: LinearProgram) -> LpSolution:
        import cvxpy as cp

        start: float = time.perf_counter()
        x = cp.Variable(lp.n_vars)
        constraints = []
        if lp.A_eq.shape[0]:
            constraints.append(lp.A_eq @ x == lp.b_eq)
        if lp.A_ub.shape[0]:
            constraints.append(lp.A_ub @ x <= lp.b_ub)
        lo_idx = np.flatnonzero(np.isfinite(lp.lower))
        up_idx = np.flatnonzero(np.isfinite(lp.upper))
        if lo_idx.size:
            constraints.append(x[lo_idx] >= lp.lower[lo_idx])
        if up_idx.size:
            constraints.append(x[up_idx] <= lp.upper[up_idx])
        problem = cp.Problem(cp.Minimize(lp.c @ x), constraints)
        with CVXPY_COMPILE_LOCK:
            problem.solve(solver=self.solver)
        seconds: float = time.perf_counter() - start

        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise InfeasibleError(f"LP infeasible ({problem.status})")
        if problem.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            raise UnboundedError(f"LP unbounded ({problem.status})")
        if problem.status != cp.OPTIMAL:
            raise NumericalFailure(f"cvxpy returned status {problem.status}")

        k = 0
        m_eq = np.zeros(lp.A_eq.shape[0])
        m_ub = np.zeros(lp.A_ub.shape[0])
        if lp.A_eq.shape[0]:
            m_eq = -np.asarray(constraints[k].dual_value, dtype=float)
            k += 1
        if lp.A_ub.shape[0]:
            m_ub = -np.asarray(constraints[k].dual_value, dtype=float)
        zeros = np.zeros(lp.n_vars)
        objective = float(problem.value)
        return LpSolution(
            x=np.asarray(x.value, dtype=float),
            objective=objective,
            eq_marginals=m_eq,
            ub_marginals=m_ub,
            lower_marginals=zeros,
            upper_marginals=zeros,
            dual_objective=objective,
            seconds=seconds,
            backend=self.name,
        )


def default_solver() -> LpSolver:
    return HighsLpSolver()
