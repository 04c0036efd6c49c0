"""Constants used throughout the application."""

# Hours per day; representative days, cumulative days and per-day ADMM blocks
HOURS_PER_DAY = 24
HOURS_PER_WEEK = 168

# Clustering
MAX_RESEED_ATTEMPTS = 5
ZERO_RANGE_FILL = 0.5  # normalized value for a feature with max == min

# Row-stochastic tolerance for transition matrices
ROW_SUM_TOL = 1e-9

# Default ADMM settings (also the CLI defaults)
DEFAULT_ADMM = {
    "beta": 1.0,
    "max_iters": 5000,
    "eps_primal": 1e-4,
    "eps_dual": 1e-4,
    "partition": "day",
}

# Residual balancing (only used when adaptive_penalty is switched on)
ADMM_BALANCE_RATIO = 10.0
ADMM_BALANCE_FACTOR = 2.0

# Comparison-table rows in display order (baseline absolute, others relative)
COMPARISON_ROWS = {
    "storage_room": "Storage Room",
    "storage_door": "Storage Door",
    "objective": "Objective",
    "energy_value": "Net Energy Value",
    "capacity_value": "Net Capacity Value",
    "solve_seconds": "Speed (s)",
}

# Synthetic instance profiles
SYNTHETIC_PROFILES = ("peaky", "seasonal", "alternating-days", "iid")

# Technology costs used by the synthetic generator. Capital costs are per MW
# (or MWh of room) per day of horizon; var_cost is per MWh.
SYNTHETIC_TECHNOLOGIES = {
    "baseload": {"var_cost": 20.0, "cap_cost": 200.0, "emission_rate": 0.9},
    "peaker": {"var_cost": 150.0, "cap_cost": 30.0, "emission_rate": 0.5},
    "wind": {"var_cost": 0.0, "cap_cost": 8.0, "emission_rate": 0.0},
    "solar": {"var_cost": 0.0, "cap_cost": 5.0, "emission_rate": 0.0},
}
SYNTHETIC_STORAGE = {"door_cost": 5.0, "room_cost": 0.1}
SYNTHETIC_BASE_LOAD = 100.0  # MW per region
