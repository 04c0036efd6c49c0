"""FastAPI dependency injection — provides solvers and config to route handlers."""

from __future__ import annotations

from backend.src.config import AppConfig, get_app_config
from backend.src.solvers.lp import CvxpyLpSolver, HighsLpSolver, LpSolver


# Module-level singletons (created once, reused by Depends())
_highs_solver = HighsLpSolver()


def get_config() -> AppConfig:
    return get_app_config()


def get_lp_solver(backend: str = "highs") -> LpSolver:
    if backend == "cvxpy":
        return CvxpyLpSolver()
    return _highs_solver
