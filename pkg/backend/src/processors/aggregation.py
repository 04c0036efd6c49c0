"""Temporal aggregations: hour-to-state maps with weights, durations and transitions.

Strategies
    aggregate_identity   one state per hour (the unaggregated model)
    representative_days  k real days, isolated 24-cycles or chained in cluster order
    system_states        k clusters of similar hours with an empirical transition matrix
    adjacent_clusters    k contiguous segments (greedy bottom-up merging)
    compress_lossless    run-length tokens refined until every state is deterministic

``check_lossless`` verifies the three conditions under which the aggregated
model reproduces the hourly one exactly:

    1. hours in a state share demand, availability and variable cost;
    2. every state has a single successor and a single predecessor, and the
       observed run sequence follows them;
    3. every visit to a state lasts exactly ``q_s`` hours.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from sklearn.cluster import KMeans

from backend.src.models.domain import Aggregation, StateProfiles, SystemInstance, TimeGrid
from backend.src.utils.constants import HOURS_PER_DAY, MAX_RESEED_ATTEMPTS, ROW_SUM_TOL
from backend.src.utils.errors import (
    DimensionMismatch,
    EmptyClusterError,
    IndivisibleHorizon,
    InvalidParameter,
    KTooLarge,
)
from backend.src.utils.logger import Logger
from backend.src.utils.scaling import minmax_normalize, series_ranges


logger: Logger = Logger(__name__)

LINKAGES: tuple[str, ...] = ("isolated", "chained")
SELECTIONS: tuple[str, ...] = ("kmeans-medoid", "peak-median")

# rounding left in per-state means of identical values
_MEAN_SLACK: float = 1e-12


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------
def hourly_features(instance: SystemInstance, include_cost: bool = False) -> np.ndarray:
    """(n, F) raw hourly series: demand, availabilities, optionally variable costs."""
    columns: list[np.ndarray] = [instance.demand]
    columns.extend(g.availability for g in instance.generators)
    if include_cost:
        columns.extend(g.var_cost for g in instance.generators)
    return np.column_stack(columns)


def feature_names(instance: SystemInstance, include_cost: bool = False) -> list[str]:
    names: list[str] = ["demand"]
    names.extend(f"availability:{g.name}" for g in instance.generators)
    if include_cost:
        names.extend(f"var_cost:{g.name}" for g in instance.generators)
    return names


def shifted_identity(n_states: int, cyclic: bool) -> np.ndarray:
    """P[i, i+1] = 1, wrapping the last state to the first when cyclic."""
    P: np.ndarray = np.eye(n_states, k=1)
    if cyclic:
        P[n_states - 1, 0] = 1.0
    return P


def relabel_by_first_appearance(labels: np.ndarray) -> np.ndarray:
    _, first_idx, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank: np.ndarray = np.argsort(np.argsort(first_idx))
    return rank[inverse.reshape(-1)]


def state_runs(gamma: np.ndarray, cyclic: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Maximal runs of equal states as (state, start, length) arrays in time order.

    On a cyclic grid a run crossing the horizon end is merged with the
    opening run; the merged run keeps the later start and sits first.
    """
    gamma = np.asarray(gamma)
    n: int = gamma.shape[0]
    cuts: np.ndarray = np.flatnonzero(np.diff(gamma)) + 1
    starts: np.ndarray = np.concatenate([[0], cuts])
    lengths: np.ndarray = np.diff(np.concatenate([starts, [n]]))
    states: np.ndarray = gamma[starts]
    if cyclic and states.shape[0] > 1 and states[0] == states[-1]:
        lengths[0] += lengths[-1]
        starts[0] = starts[-1]
        states, starts, lengths = states[:-1], starts[:-1], lengths[:-1]
    return states.astype(int), starts.astype(int), lengths.astype(int)


def _build(
    instance: SystemInstance,
    gamma: np.ndarray,
    q: np.ndarray,
    transition: np.ndarray,
    method: str,
    profiles: StateProfiles | None = None,
    meta: dict[str, Any] | None = None,
) -> Aggregation:
    S: int = transition.shape[0]
    agg = Aggregation(
        gamma=gamma,
        w=np.bincount(gamma, minlength=S).astype(float),
        q=np.asarray(q, dtype=float),
        transition=transition,
        profiles=profiles if profiles is not None else StateProfiles.from_hours(instance, gamma, S),
        cyclic=instance.grid.cyclic,
        method=method,
        meta=meta or {},
    )
    agg.validate()
    logger.info("aggregation built", method=method, hours=agg.n_hours, states=S)
    return agg


# ---------------------------------------------------------------------------
# Identity
# ---------------------------------------------------------------------------
def aggregate_identity(grid: TimeGrid, instance: SystemInstance | None = None) -> Aggregation:
    """One state per hour with w = q = 1 and the shifted-identity transition.

    Without an instance the profiles carry demand only (zeros) and no
    generators; ``solve_aggregated`` then reads the hourly data directly.
    """
    n: int = grid.n_hours
    gamma: np.ndarray = np.arange(n)
    if instance is None:
        profiles = StateProfiles(
            demand=np.zeros(n), availability=np.zeros((0, n)), var_cost=np.zeros((0, n))
        )
    else:
        profiles = StateProfiles(
            demand=instance.demand,
            availability=instance.availability_matrix(),
            var_cost=instance.var_cost_matrix(),
        )
    agg = Aggregation(
        gamma=gamma,
        w=np.ones(n),
        q=np.ones(n),
        transition=shifted_identity(n, grid.cyclic),
        profiles=profiles,
        cyclic=grid.cyclic,
        method="identity",
    )
    agg.validate()
    return agg


# ---------------------------------------------------------------------------
# k-means with deterministic farthest-point seeding
# ---------------------------------------------------------------------------
def _farthest_point_centers(X: np.ndarray, k: int, first: int) -> np.ndarray:
    chosen: list[int] = [first]
    dist: np.ndarray = np.linalg.norm(X - X[first], axis=1)
    for _ in range(1, k):
        nxt: int = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(X - X[nxt], axis=1))
    return X[chosen]


def kmeans_labels(X: np.ndarray, k: int, seed_index: int = 0) -> np.ndarray:
    """Cluster rows of X into exactly k non-empty clusters, labelled by first appearance."""
    n_distinct: int = np.unique(X, axis=0).shape[0]
    if k > n_distinct:
        raise KTooLarge(f"k={k} exceeds the {n_distinct} distinct feature vectors")

    rng = np.random.default_rng(seed_index)
    first: int = seed_index
    for attempt in range(MAX_RESEED_ATTEMPTS):
        centers = _farthest_point_centers(X, k, first)
        km = KMeans(n_clusters=k, init=centers, n_init=1, random_state=0)
        labels: np.ndarray = km.fit_predict(X)
        if np.unique(labels).shape[0] == k:
            return relabel_by_first_appearance(labels)
        logger.warning("empty cluster, re-seeding", attempt=attempt + 1, k=k)
        first = int(rng.integers(X.shape[0]))
    raise EmptyClusterError(f"k-means left empty clusters after {MAX_RESEED_ATTEMPTS} seeds")


# ---------------------------------------------------------------------------
# Representative days
# ---------------------------------------------------------------------------
def _medoids(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    reps: np.ndarray = np.empty(k, dtype=int)
    for c in range(k):
        members: np.ndarray = np.flatnonzero(labels == c)
        centroid: np.ndarray = X[members].mean(axis=0)
        reps[c] = members[int(np.argmin(np.linalg.norm(X[members] - centroid, axis=1)))]
    return reps


def _peak_median_days(demand_by_day: np.ndarray, k_days: int) -> np.ndarray:
    """Peak-load and median-load day of each of k/2 equal seasons."""
    picks: list[int] = []
    daily_peak: np.ndarray = demand_by_day.max(axis=1)
    daily_total: np.ndarray = demand_by_day.sum(axis=1)
    for season in np.array_split(np.arange(demand_by_day.shape[0]), k_days // 2):
        peak: int = int(season[np.argmax(daily_peak[season])])
        ranked: np.ndarray = season[np.argsort(daily_total[season], kind="stable")]
        mid: int = (ranked.shape[0] - 1) // 2
        by_closeness = sorted(range(ranked.shape[0]), key=lambda i: (abs(i - mid), i))
        median: int = next(int(ranked[i]) for i in by_closeness if ranked[i] != peak)
        picks.extend(sorted((peak, median)))
    return np.asarray(picks, dtype=int)


def _assign_to_nearest(X: np.ndarray, reps: np.ndarray) -> np.ndarray:
    dist: np.ndarray = np.linalg.norm(X[:, None, :] - X[reps][None, :, :], axis=2)
    labels: np.ndarray = np.argmin(dist, axis=1)
    labels[reps] = np.arange(reps.shape[0])
    return labels


def representative_days(
    instance: SystemInstance,
    k_days: int,
    linkage: str = "isolated",
    selection: str = "kmeans-medoid",
) -> Aggregation:
    """k real days standing in for clusters of similar days.

    Each representative contributes 24 states weighted by its cluster size.
    ``isolated`` closes every day on itself; ``chained`` links the last hour
    of each representative to the first hour of the next one in cluster order
    (and the last back to the first).
    """
    if linkage not in LINKAGES:
        raise InvalidParameter(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    if selection not in SELECTIONS:
        raise InvalidParameter(f"selection must be one of {SELECTIONS}, got {selection!r}")
    n: int = instance.n_hours
    if n % HOURS_PER_DAY:
        raise IndivisibleHorizon(f"{n} hours is not a whole number of days")
    n_days: int = n // HOURS_PER_DAY
    if not 1 <= k_days <= n_days:
        raise KTooLarge(f"k_days={k_days} must lie in 1..{n_days}")

    day_features: np.ndarray = minmax_normalize(hourly_features(instance)).reshape(n_days, -1)

    if selection == "kmeans-medoid":
        labels = kmeans_labels(day_features, k_days)
        reps = _medoids(day_features, labels, k_days)
    else:
        if k_days % 2:
            raise InvalidParameter("peak-median selection needs an even k_days")
        picks = _peak_median_days(instance.demand.reshape(n_days, HOURS_PER_DAY), k_days)
        labels = relabel_by_first_appearance(_assign_to_nearest(day_features, picks))
        reps = np.empty(k_days, dtype=int)
        reps[labels[picks]] = picks

    hours: np.ndarray = np.arange(n)
    gamma: np.ndarray = labels[hours // HOURS_PER_DAY] * HOURS_PER_DAY + hours % HOURS_PER_DAY

    S: int = k_days * HOURS_PER_DAY
    transition: np.ndarray = np.zeros((S, S))
    for c in range(k_days):
        base: int = c * HOURS_PER_DAY
        for j in range(HOURS_PER_DAY - 1):
            transition[base + j, base + j + 1] = 1.0
        nxt: int = base if linkage == "isolated" else ((c + 1) % k_days) * HOURS_PER_DAY
        transition[base + HOURS_PER_DAY - 1, nxt] = 1.0

    rep_hours: np.ndarray = (reps[:, None] * HOURS_PER_DAY + np.arange(HOURS_PER_DAY)).ravel()
    profiles = StateProfiles(
        demand=instance.demand[rep_hours],
        availability=instance.availability_matrix()[:, rep_hours],
        var_cost=instance.var_cost_matrix()[:, rep_hours],
    )
    cluster_sizes: np.ndarray = np.bincount(labels, minlength=k_days)
    return _build(
        instance,
        gamma,
        np.ones(S),
        transition,
        method="representative_days",
        profiles=profiles,
        meta={
            "linkage": linkage,
            "selection": selection,
            "representative_days": reps.tolist(),
            "cluster_sizes": cluster_sizes.tolist(),
        },
    )


# ---------------------------------------------------------------------------
# System states
# ---------------------------------------------------------------------------
def empirical_transition(
    run_states: np.ndarray, n_states: int, cyclic: bool
) -> np.ndarray:
    """Row-normalized run-to-run transition counts.

    A state never left gets a self-loop; on a non-cyclic grid the terminal
    state keeps a zero row.
    """
    counts: np.ndarray = np.zeros((n_states, n_states))
    np.add.at(counts, (run_states[:-1], run_states[1:]), 1.0)
    if cyclic:
        counts[run_states[-1], run_states[0]] += 1.0
    row_sums: np.ndarray = counts.sum(axis=1, keepdims=True)
    P: np.ndarray = np.divide(counts, row_sums, out=np.zeros_like(counts), where=row_sums > 0)
    for s in np.flatnonzero(row_sums.ravel() == 0):
        if cyclic or s != run_states[-1]:
            P[s, s] = 1.0
    return P


def system_states(instance: SystemInstance, k_states: int, seed_hour: int = 0) -> Aggregation:
    """Cluster hours on normalized (demand, availability) and estimate P from the sequence."""
    n: int = instance.n_hours
    if not 1 <= k_states <= n:
        raise KTooLarge(f"k_states={k_states} must lie in 1..{n}")

    features: np.ndarray = minmax_normalize(hourly_features(instance))
    gamma: np.ndarray = kmeans_labels(features, k_states, seed_index=seed_hour)

    run_states, _, run_lengths = state_runs(gamma, instance.grid.cyclic)
    transition = empirical_transition(run_states, k_states, instance.grid.cyclic)
    visits: np.ndarray = np.bincount(run_states, minlength=k_states)
    q: np.ndarray = np.bincount(run_states, weights=run_lengths, minlength=k_states) / visits
    return _build(
        instance,
        gamma,
        q,
        transition,
        method="system_states",
        meta={"visits": visits.tolist()},
    )


# ---------------------------------------------------------------------------
# Adjacent (contiguity-constrained) clustering
# ---------------------------------------------------------------------------
def contiguous_segments(X: np.ndarray, k: int) -> np.ndarray:
    """Start indices of k contiguous segments from greedy Ward-cost merging.

    The cheapest adjacent pair is merged first; equal costs go to the pair
    with the lower left index.
    """
    n: int = X.shape[0]
    size: np.ndarray = np.ones(n)
    total: np.ndarray = np.array(X, dtype=float, copy=True)
    nxt: list[int] = [*range(1, n), -1]
    prv: list[int] = [-1, *range(n - 1)]
    alive: np.ndarray = np.ones(n, dtype=bool)
    version: list[int] = [0] * n

    def cost(i: int, j: int) -> float:
        diff = total[i] / size[i] - total[j] / size[j]
        return float(size[i] * size[j] / (size[i] + size[j]) * diff @ diff)

    heap: list[tuple[float, int, int, int, int]] = [
        (cost(i, i + 1), i, i + 1, 0, 0) for i in range(n - 1)
    ]
    heapq.heapify(heap)
    segments: int = n
    while segments > k and heap:
        _, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j] and nxt[i] == j and version[i] == vi and version[j] == vj):
            continue
        size[i] += size[j]
        total[i] += total[j]
        alive[j] = False
        nxt[i] = nxt[j]
        if nxt[j] != -1:
            prv[nxt[j]] = i
        version[i] += 1
        segments -= 1
        if prv[i] != -1:
            heapq.heappush(heap, (cost(prv[i], i), prv[i], i, version[prv[i]], version[i]))
        if nxt[i] != -1:
            heapq.heappush(heap, (cost(i, nxt[i]), i, nxt[i], version[i], version[nxt[i]]))
    return np.flatnonzero(alive)


def adjacent_clusters(instance: SystemInstance, k_states: int) -> Aggregation:
    """Contiguous segments with w = q = segment length and a shifted-identity P."""
    n: int = instance.n_hours
    if not 1 <= k_states <= n:
        raise KTooLarge(f"k_states={k_states} must lie in 1..{n}")
    starts = contiguous_segments(minmax_normalize(hourly_features(instance)), k_states)
    lengths: np.ndarray = np.diff(np.concatenate([starts, [n]]))
    gamma: np.ndarray = np.repeat(np.arange(k_states), lengths)
    return _build(
        instance,
        gamma,
        lengths,
        shifted_identity(k_states, instance.grid.cyclic),
        method="adjacent_clusters",
    )


# ---------------------------------------------------------------------------
# Lossless verification
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LosslessViolation:
    condition: int  # 1 profiles, 2 transitions, 3 durations
    subject: str
    indices: tuple[int, ...]
    magnitude: float
    detail: str = ""


@dataclass
class LosslessReport:
    violations: list[LosslessViolation] = field(default_factory=list)

    @property
    def lossless(self) -> bool:
        return not self.violations

    @property
    def max_violation(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)

    def by_condition(self, condition: int) -> list[LosslessViolation]:
        return [v for v in self.violations if v.condition == condition]

    def to_dict(self) -> dict[str, Any]:
        return {
            "lossless": self.lossless,
            "violations": [
                {
                    "condition": v.condition,
                    "subject": v.subject,
                    "indices": list(v.indices),
                    "magnitude": v.magnitude,
                    "detail": v.detail,
                }
                for v in self.violations
            ],
        }


def _profile_violations(
    agg: Aggregation, instance: SystemInstance, tol: float
) -> list[LosslessViolation]:
    raw: np.ndarray = hourly_features(instance, include_cost=True)
    names: list[str] = feature_names(instance, include_cost=True)
    scale: np.ndarray = series_ranges(raw)

    order: np.ndarray = np.argsort(agg.gamma, kind="stable")
    sorted_states: np.ndarray = agg.gamma[order]
    bounds: np.ndarray = np.flatnonzero(np.r_[True, np.diff(sorted_states) != 0])
    present: np.ndarray = sorted_states[bounds]
    block: np.ndarray = raw[order]
    spread: np.ndarray = np.maximum.reduceat(block, bounds) - np.minimum.reduceat(block, bounds)

    p = agg.profiles
    if p.availability.shape[0] == instance.n_generators:
        state_data = np.column_stack([p.demand, p.availability.T, p.var_cost.T])
        dev = np.abs(block - state_data[sorted_states])
        spread = np.maximum(spread, np.maximum.reduceat(dev, bounds))

    bad_rows, bad_cols = np.nonzero(spread / scale > tol + _MEAN_SLACK)
    return [
        LosslessViolation(
            condition=1,
            subject="state",
            indices=(int(present[r]),),
            magnitude=float(spread[r, c]),
            detail=names[c],
        )
        for r, c in zip(bad_rows, bad_cols, strict=True)
    ]


def _transition_violations(agg: Aggregation) -> list[LosslessViolation]:
    P: np.ndarray = agg.transition
    found: list[LosslessViolation] = []
    terminal: int = int(agg.gamma[-1])
    initial: int = int(agg.gamma[0])

    positive: np.ndarray = P > ROW_SUM_TOL
    unit: np.ndarray = np.abs(P - 1.0) <= ROW_SUM_TOL
    for s in range(agg.n_states):
        empty_terminal = not agg.cyclic and s == terminal and not positive[s].any()
        if empty_terminal:
            continue
        if not (unit[s].sum() == 1 and positive[s].sum() == 1):
            found.append(
                LosslessViolation(2, "successor", (s,), float(1.0 - P[s].max()), "row")
            )
    predecessors: np.ndarray = positive.sum(axis=0)
    for s in np.flatnonzero(predecessors > 1):
        found.append(
            LosslessViolation(2, "predecessor", (int(s),), float(predecessors[s] - 1), "column")
        )
    if not agg.cyclic and positive[:, initial].any():
        found.append(
            LosslessViolation(2, "predecessor", (initial,), 1.0, "first state has a predecessor")
        )

    run_states, _, _ = state_runs(agg.gamma, agg.cyclic)
    src: np.ndarray = run_states[:-1]
    dst: np.ndarray = run_states[1:]
    if agg.cyclic:
        src = np.append(src, run_states[-1])
        dst = np.append(dst, run_states[0])
    missing: np.ndarray = P[src, dst] < 1.0 - ROW_SUM_TOL
    for a, b in sorted({(int(a), int(b)) for a, b in zip(src[missing], dst[missing], strict=True)}):
        found.append(
            LosslessViolation(2, "transition", (a, b), float(1.0 - P[a, b]), "observed")
        )
    return found


def _duration_violations(agg: Aggregation) -> list[LosslessViolation]:
    run_states, run_starts, run_lengths = state_runs(agg.gamma, agg.cyclic)
    gap: np.ndarray = np.abs(run_lengths - agg.q[run_states])
    return [
        LosslessViolation(3, "run", (int(run_states[i]), int(run_starts[i])), float(gap[i]))
        for i in np.flatnonzero(gap > ROW_SUM_TOL)
    ]


def check_lossless(
    agg: Aggregation, instance: SystemInstance, tol: float = 0.0
) -> LosslessReport:
    """Report every breach of the three lossless conditions.

    Condition 1 compares spreads on series normalized by their horizon range
    against ``tol`` and reports magnitudes in raw units.
    """
    if agg.n_hours != instance.n_hours:
        raise DimensionMismatch(
            f"aggregation covers {agg.n_hours} hours, instance has {instance.n_hours}"
        )
    report = LosslessReport(
        violations=[
            *_profile_violations(agg, instance, tol),
            *_transition_violations(agg),
            *_duration_violations(agg),
        ]
    )
    logger.debug(
        "check_lossless",
        method=agg.method,
        states=agg.n_states,
        lossless=report.lossless,
        violations=len(report.violations),
    )
    return report


# ---------------------------------------------------------------------------
# Lossless compression
# ---------------------------------------------------------------------------
def _run_tokens(norm: np.ndarray, half: float, cyclic: bool) -> list[np.ndarray]:
    """Consecutive hours within ``half`` of their run's first hour form a token."""
    n: int = norm.shape[0]
    starts: list[int] = [0]
    anchor: np.ndarray = norm[0]
    for h in range(1, n):
        if np.max(np.abs(norm[h] - anchor)) > half:
            starts.append(h)
            anchor = norm[h]
    bounds: list[int] = [*starts, n]
    tokens: list[np.ndarray] = [
        np.arange(a, b) for a, b in zip(bounds[:-1], bounds[1:], strict=True)
    ]
    if cyclic and len(tokens) > 1:
        last = tokens[-1]
        if np.max(np.abs(norm[last] - norm[tokens[0][0]])) <= half:
            tokens[0] = np.concatenate([last, tokens[0]])
            tokens.pop()
    return tokens


def _initial_classes(norm: np.ndarray, tokens: list[np.ndarray], half: float) -> np.ndarray:
    """Group tokens of equal length whose profiles sit within ``half`` of a class anchor."""
    anchors: dict[int, list[np.ndarray]] = {}
    ids: dict[int, list[int]] = {}
    classes: np.ndarray = np.empty(len(tokens), dtype=int)
    next_id: int = 0
    for i, tok in enumerate(tokens):
        length: int = tok.shape[0]
        profile: np.ndarray = norm[tok[0]]
        pool = anchors.setdefault(length, [])
        match: int | None = None
        if pool:
            dist = np.max(np.abs(np.asarray(pool) - profile), axis=1)
            hit = np.flatnonzero(dist <= half)
            if hit.size:
                match = ids[length][int(hit[0])]
        if match is None:
            pool.append(profile)
            ids.setdefault(length, []).append(next_id)
            match = next_id
            next_id += 1
        classes[i] = match
    return classes


def _refine(classes: np.ndarray, cyclic: bool) -> np.ndarray:
    """Split classes by successor and predecessor class until nothing changes."""
    while True:
        if cyclic:
            succ = np.roll(classes, -1)
            pred = np.roll(classes, 1)
        else:
            succ = np.append(classes[1:], -1)
            pred = np.insert(classes[:-1], 0, -1)
        keys: np.ndarray = np.column_stack([classes, succ, pred])
        _, refined = np.unique(keys, axis=0, return_inverse=True)
        refined = refined.reshape(-1)
        if refined.max() == classes.max():
            return classes
        classes = refined


def compress_lossless(instance: SystemInstance, tol: float = 0.0) -> Aggregation:
    """Heuristic lossless compressor; falls back to the identity aggregation.

    No minimality claim: equal-profile runs are merged into one state only
    when their lengths, successors and predecessors agree.
    """
    n: int = instance.n_hours
    cyclic: bool = instance.grid.cyclic
    raw: np.ndarray = hourly_features(instance, include_cost=True)
    norm: np.ndarray = (raw - raw.min(axis=0)) / series_ranges(raw)
    half: float = tol / 2.0

    tokens = _run_tokens(norm, half, cyclic)
    classes = _refine(_initial_classes(norm, tokens, half), cyclic)

    token_of_hour: np.ndarray = np.empty(n, dtype=int)
    for i, tok in enumerate(tokens):
        token_of_hour[tok] = i
    hour_class: np.ndarray = classes[token_of_hour]
    gamma: np.ndarray = relabel_by_first_appearance(hour_class)
    state_of_class: dict[int, int] = {
        int(c): int(s) for c, s in zip(hour_class, gamma, strict=True)
    }

    S: int = int(gamma.max()) + 1
    q: np.ndarray = np.zeros(S)
    transition: np.ndarray = np.zeros((S, S))
    for i, tok in enumerate(tokens):
        s = state_of_class[int(classes[i])]
        q[s] = tok.shape[0]
        if i + 1 < len(tokens):
            transition[s, state_of_class[int(classes[i + 1])]] = 1.0
        elif cyclic:
            transition[s, state_of_class[int(classes[0])]] = 1.0

    agg = _build(
        instance, gamma, q, transition, method="lossless", meta={"tokens": len(tokens)}
    )
    report = check_lossless(agg, instance, tol)
    if report.lossless:
        logger.info("compress_lossless", hours=n, states=S, ratio=n / S)
        return agg
    logger.warning(
        "compressed aggregation failed verification, returning identity",
        violations=len(report.violations),
    )
    return aggregate_identity(instance.grid, instance)


@dataclass(frozen=True)
class LosslessPoint:
    k: int
    n_states: int
    lossless: bool
    max_violation: float
    violations: int


@dataclass
class LosslessCurve:
    points: list[LosslessPoint]

    @property
    def first_lossless_k(self) -> int | None:
        return next((p.k for p in self.points if p.lossless), None)


def lossless_feasibility_curve(
    instance: SystemInstance, ks: list[int] | None = None, tol: float = 0.0
) -> LosslessCurve:
    """check_lossless across an adjacent-clustering k sweep (ascending k)."""
    n: int = instance.n_hours
    if ks is None:
        ks = sorted({*np.unique(np.geomspace(1, n, 16).round().astype(int)).tolist(), n})
    points: list[LosslessPoint] = []
    for k in sorted(set(ks)):
        agg = adjacent_clusters(instance, k)
        report = check_lossless(agg, instance, tol)
        points.append(
            LosslessPoint(
                k=k,
                n_states=agg.n_states,
                lossless=report.lossless,
                max_violation=report.max_violation,
                violations=len(report.violations),
            )
        )
    curve = LosslessCurve(points)
    logger.info("lossless feasibility curve", hours=n, first_lossless_k=curve.first_lossless_k)
    return curve
