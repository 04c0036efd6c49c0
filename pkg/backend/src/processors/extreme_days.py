"""Cumulative days and extreme-vertex day covers.

Each day collapses to the within-day sums of every (region, feature)
series, normalized to [0, 1]. Per region, the corners of the feature cube
are the extreme vertices; a cover picks days so that every vertex has a
chosen day within ``radius``. A vertex whose nearest day is farther than
``radius`` is served by that nearest day and flagged as uncoverable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import Bounds, LinearConstraint, milp

from backend.src.utils.constants import HOURS_PER_DAY
from backend.src.utils.errors import IndivisibleHorizon, InvalidParameter, NumericalFailure
from backend.src.utils.logger import Logger
from backend.src.utils.scaling import minmax_normalize


logger: Logger = Logger(__name__)

COVER_METHODS: tuple[str, ...] = ("greedy", "exact")
_DIST_SLACK: float = 1e-12


@dataclass(frozen=True)
class CumulativeDayset:
    days: np.ndarray  # (D, F), entries in [0, 1]
    columns: tuple[tuple[str, str], ...]  # (region, feature) per column

    @property
    def n_days(self) -> int:
        return int(self.days.shape[0])

    @property
    def regions(self) -> list[str]:
        return list(dict.fromkeys(region for region, _ in self.columns))

    def region_columns(self, region: str) -> list[int]:
        return [i for i, (r, _) in enumerate(self.columns) if r == region]

    def subset(self, regions: list[str]) -> CumulativeDayset:
        keep = [i for i, (r, _) in enumerate(self.columns) if r in regions]
        return CumulativeDayset(self.days[:, keep], tuple(self.columns[i] for i in keep))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.days, columns=pd.MultiIndex.from_tuples(self.columns, names=["region", "feature"])
        )


@dataclass(frozen=True)
class Vertex:
    region: str
    corner: tuple[int, ...]
    nearest_day: int
    nearest_distance: float


@dataclass
class VertexCover:
    vertices: list[Vertex]
    radius: float
    chosen_days: list[int]
    assignment: dict[int, int]  # vertex index -> chosen day
    uncoverable: list[int] = field(default_factory=list)
    method: str = "greedy"

    @property
    def n_chosen(self) -> int:
        return len(self.chosen_days)

    def assignment_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "vertex": i,
                    "region": v.region,
                    "corner": "".join(str(c) for c in v.corner),
                    "day": self.assignment[i],
                    "nearest_day": v.nearest_day,
                    "nearest_distance": v.nearest_distance,
                    "uncoverable": i in self.uncoverable,
                }
                for i, v in enumerate(self.vertices)
            ]
        )

    def scatter_frame(self, cds: CumulativeDayset) -> pd.DataFrame:
        """Day coordinates with a chosen flag, one row per day."""
        frame = pd.DataFrame(cds.days, columns=[f"{r}:{f}" for r, f in cds.columns])
        frame.insert(0, "day", np.arange(cds.n_days))
        frame["chosen"] = frame["day"].isin(self.chosen_days)
        return frame


def cumulative_days(series: pd.DataFrame) -> CumulativeDayset:
    """Daily sums of hourly series, min/max normalized per column.

    ``series`` has one row per hour and (region, feature) columns; flat
    columns are read as features of a single region named ``system``.
    """
    n: int = len(series)
    if n == 0 or n % HOURS_PER_DAY:
        raise IndivisibleHorizon(f"{n} hours is not a whole number of days")
    if isinstance(series.columns, pd.MultiIndex):
        columns = tuple((str(r), str(f)) for r, f in series.columns)
    else:
        columns = tuple(("system", str(f)) for f in series.columns)
    values: np.ndarray = series.to_numpy(dtype=float)
    daily: np.ndarray = values.reshape(n // HOURS_PER_DAY, HOURS_PER_DAY, -1).sum(axis=1)
    return CumulativeDayset(days=minmax_normalize(daily), columns=columns)


def _vertex_distances(cds: CumulativeDayset) -> tuple[list[Vertex], np.ndarray]:
    """All region corners and the (V, D) day-to-vertex distance matrix."""
    vertices: list[Vertex] = []
    rows: list[np.ndarray] = []
    for region in cds.regions:
        block: np.ndarray = cds.days[:, cds.region_columns(region)]
        for corner in itertools.product((0, 1), repeat=block.shape[1]):
            dist = np.linalg.norm(block - np.asarray(corner, dtype=float), axis=1)
            nearest = int(np.argmin(dist))
            vertices.append(Vertex(region, corner, nearest, float(dist[nearest])))
            rows.append(dist)
    return vertices, np.vstack(rows)


def _greedy_cover(coverage: np.ndarray) -> list[int]:
    """Most-unmet-requirements-first, lowest day on ties, then drop redundant days."""
    unmet: np.ndarray = np.ones(coverage.shape[0], dtype=bool)
    chosen: list[int] = []
    while unmet.any():
        gains: np.ndarray = coverage[unmet].sum(axis=0)
        best: int = int(np.argmax(gains))
        if gains[best] == 0:
            break
        chosen.append(best)
        unmet &= ~coverage[:, best]

    for day in reversed(list(chosen)):
        rest = [d for d in chosen if d != day]
        if rest and coverage[:, rest].any(axis=1).all():
            chosen = rest
    return sorted(chosen)


def _coverage(dist: np.ndarray, nearest: np.ndarray, radius: float) -> np.ndarray:
    reach: np.ndarray = np.maximum(radius, nearest) + _DIST_SLACK
    return dist <= reach[:, None]


def _radius_monotone_greedy(dist: np.ndarray, nearest: np.ndarray, radius: float) -> list[int]:
    """Smallest greedy cover over every coverage pattern reachable at radii <= ``radius``.

    A cover at a smaller radius stays valid at a larger one, so taking the
    minimum over all smaller patterns makes the count non-increasing in radius.
    """
    best: list[int] = _greedy_cover(_coverage(dist, nearest, radius))
    levels: np.ndarray = np.unique(dist[(dist < radius) & (dist > nearest[:, None])])
    for level in [*levels[::-1].tolist(), 0.0]:
        if len(best) <= 1:
            break
        candidate = _greedy_cover(_coverage(dist, nearest, level))
        if len(candidate) < len(best):
            best = candidate
    return best


def _exact_cover(coverage: np.ndarray) -> list[int]:
    """Minimum-cardinality cover by MILP; lower day indices win among optima."""
    n_vertices, n_days = coverage.shape
    cost: np.ndarray = 1.0 + 1e-4 * np.arange(n_days) / max(n_days, 1)
    res = milp(
        c=cost,
        constraints=LinearConstraint(coverage.astype(float), lb=np.ones(n_vertices), ub=np.inf),
        integrality=np.ones(n_days),
        bounds=Bounds(0, 1),
    )
    if res.status != 0 or res.x is None:
        raise NumericalFailure(f"exact day cover failed: {res.message}")
    return np.flatnonzero(res.x > 0.5).tolist()


def select_extreme_days(
    cds: CumulativeDayset, radius: float, method: str = "greedy"
) -> VertexCover:
    """Choose days so every region corner has a chosen day within ``radius``."""
    if radius <= 0:
        raise InvalidParameter(f"radius must be > 0, got {radius}")
    if method not in COVER_METHODS:
        raise InvalidParameter(f"method must be one of {COVER_METHODS}, got {method!r}")

    vertices, dist = _vertex_distances(cds)
    nearest: np.ndarray = np.array([v.nearest_distance for v in vertices])
    uncoverable: list[int] = np.flatnonzero(nearest > radius + _DIST_SLACK).tolist()

    if method == "greedy":
        chosen = _radius_monotone_greedy(dist, nearest, radius)
    else:
        chosen = _exact_cover(_coverage(dist, nearest, radius))

    chosen_arr = np.asarray(chosen, dtype=int)
    assignment: dict[int, int] = {}
    for i in range(len(vertices)):
        d = dist[i, chosen_arr]
        assignment[i] = int(chosen_arr[int(np.argmin(d))])

    if uncoverable:
        logger.warning("vertices outside radius", uncoverable=len(uncoverable), radius=radius)
    logger.info(
        "extreme days selected",
        method=method,
        regions=len(cds.regions),
        vertices=len(vertices),
        chosen=len(chosen),
        radius=radius,
    )
    return VertexCover(
        vertices=vertices,
        radius=radius,
        chosen_days=chosen,
        assignment=assignment,
        uncoverable=uncoverable,
        method=method,
    )
