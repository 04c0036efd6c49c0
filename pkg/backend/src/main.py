"""App factory — FastAPI init, CORS and routers."""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from backend.src.api.v1 import aggregate as v1_aggregate
from backend.src.api.v1 import compare as v1_compare
from backend.src.api.v1 import health as v1_health
from backend.src.api.v1 import solve as v1_solve
from backend.src.api.v1 import valuation as v1_valuation
from backend.src.config import get_app_config


# ---------------------------------------------------------------------------
# App
# ---------------------------------------------------------------------------
app: FastAPI = FastAPI(title="Storage Planning API")

app.add_middleware(
    CORSMiddleware,
    allow_origins=get_app_config().allowed_origins.split(","),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# ---------------------------------------------------------------------------
# Routers (/api/v1/)
# ---------------------------------------------------------------------------
app.include_router(v1_health.router)
app.include_router(v1_solve.router)
app.include_router(v1_valuation.router)
app.include_router(v1_aggregate.router)
app.include_router(v1_compare.router)
