"""App configuration — env-based settings, tolerances and paths."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


# ---------------------------------------------------------------------------
# Environment-based configuration (reads from .env)
# ---------------------------------------------------------------------------
class AppConfig(BaseSettings):
    """Solver tolerances, backends and runtime knobs.

    Every field can be overridden with a ``STORAGE_PLAN_`` prefixed
    environment variable, e.g. ``STORAGE_PLAN_EPS_KKT=1e-7``.
    """

    # Absolute feasibility / KKT tolerance on normalized data
    eps_feas: float = 1e-6
    eps_kkt: float = 1e-6
    # Relative duality-gap tolerance
    eps_gap: float = 1e-8
    # Marginal-value identities, relative to max(1, c^u, c^t)
    eps_id: float = 1e-5

    # "highs-ds" returns vertex solutions, so complementary slackness is exact
    lp_method: str = "highs-ds"
    lp_feasibility_tol: float = 1e-9
    qp_solver: str = "CLARABEL"

    admm_workers: int = 4
    comparison_workers: int = 2

    log_dir: str = "logs"
    log_level: str = "INFO"
    log_to_file: bool = True

    # CORS: comma-separated list of allowed origins for the HTTP API
    allowed_origins: str = "http://localhost:3000,http://localhost:8000"

    model_config = SettingsConfigDict(
        env_prefix="STORAGE_PLAN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


@lru_cache(maxsize=1)
def get_app_config() -> AppConfig:
    return AppConfig()


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------
PROJECT_DIR: Path = Path(__file__).resolve().parent.parent.parent
BACKEND_DIR: Path = PROJECT_DIR / "backend"
CONFIG_DIR: Path = BACKEND_DIR / "config"
SCENARIOS_DIR: Path = CONFIG_DIR / "scenarios"
INSTANCES_DIR: Path = CONFIG_DIR / "instances"
REPORTS_DIR: Path = BACKEND_DIR / "data" / "reports"
