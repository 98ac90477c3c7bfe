"""Deterministic derivative-free global minimization over truncated feasible
windows, plus an independent exhaustive-grid oracle.

The search runs in three stages: a coarse feasible grid scan over
X intersected with the active-norm ball of radius R, local refinement of the
best-scoring and seeded random starts by pattern search over a sign-vector
direction set (step halving on failure, projection after every trial step),
and clustering of the refined endpoints.  A cluster is a representative
separated from the others by at least ``separation`` in the ambient norm
whose value lies within ``value_tolerance`` of the best value found; the
cluster count is the operational surrogate for the number of global minima,
and every report carries the pair of tolerances that define it.

Everything is deterministic given (config, seed): grid scans break ties by
lexicographic grid-index order, refinements run in start order, and the
random starts come from a seeded generator.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleTruncation
from .spaces import FeasibleSet, NormSpec, SampleDomain, norm

_STREAM_STARTS = 0x51A7


class SearchStatus(enum.Enum):
    OK = "ok"
    BUDGET_EXHAUSTED = "budget_exhausted"
    NO_MINIMUM_SUSPECTED = "no_minimum_suspected"


@dataclass(frozen=True)
class OptimizeConfig:
    """Knobs for :func:`global_minimize`; all results are pure functions of
    (config, objective, set, radius)."""

    coarse_grid: int = 33
    multistart: int = 32
    initial_step: float | None = None  # None: radius / 10
    shrink: float = 0.5
    termination_step: float = 1e-9
    value_tolerance: float = 1e-6
    separation: float = 1e-3
    budget: int = 1_000_000
    seed: int = 0
    directions: str = "auto"  # "axes" | "full" | "auto"

    def __post_init__(self):
        if self.coarse_grid < 1 or self.multistart < 1 or self.budget < 1:
            raise ValueError("coarse_grid, multistart and budget must be positive")
        if self.initial_step is not None and not self.initial_step > 0.0:
            raise ValueError("initial_step must be positive when given")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.termination_step > 0.0:
            raise ValueError("termination_step must be positive")
        if not self.value_tolerance > 0.0:
            raise ValueError("value_tolerance must be positive")
        if not self.separation > self.termination_step:
            raise ValueError("separation must exceed the termination step")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.directions not in ("axes", "full", "auto"):
            raise ValueError("directions must be one of axes/full/auto")


@dataclass(frozen=True)
class Cluster:
    point: tuple[float, ...]
    value: float

    @property
    def point_array(self) -> np.ndarray:
        return np.array(self.point, dtype=float)


@dataclass(frozen=True)
class MinimizationResult:
    clusters: tuple[Cluster, ...]
    global_value: float
    status: SearchStatus
    evaluations: int
    radius: float
    value_tolerance: float
    separation: float

    @property
    def best_point(self) -> np.ndarray:
        return self.clusters[0].point_array

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)


class _Budget:
    __slots__ = ("limit", "used", "exhausted")

    def __init__(self, limit: int):
        self.limit = int(limit)
        self.used = 0
        self.exhausted = False

    def take(self, k: int = 1) -> int:
        grant = min(k, self.limit - self.used)
        if grant < k:
            self.exhausted = True
        self.used += max(grant, 0)
        return max(grant, 0)


def direction_set(dimension: int, mode: str = "auto") -> np.ndarray:
    """Search directions: signed axes, optionally all nonzero sign vectors.

    Axis-only compass search stalls on max-norm style objectives (it cannot
    descend along the diagonal kinks), so "auto" uses the full sign-vector
    set whenever it stays small and falls back to axes plus pairwise
    diagonals above that.
    """
    axes = []
    for i in range(dimension):
        e = np.zeros(dimension)
        e[i] = 1.0
        axes.extend((e.copy(), -e))
    axes = np.array(axes)
    if mode == "axes":
        return axes
    full_size = 3 ** dimension - 1
    if mode == "full" or full_size <= 80:
        combos = [
            np.array(s, dtype=float)
            for s in itertools.product((-1.0, 0.0, 1.0), repeat=dimension)
            if any(v != 0.0 for v in s)
        ]
        return np.array(combos)
    pairs = []
    for i in range(dimension):
        for j in range(i + 1, dimension):
            for si, sj in itertools.product((1.0, -1.0), repeat=2):
                d = np.zeros(dimension)
                d[i], d[j] = si, sj
                pairs.append(d)
    return np.vstack([axes, np.array(pairs)])


def pattern_search(
    objective: Callable[[np.ndarray], float],
    domain: FeasibleSet,
    radius: float,
    norm_spec: NormSpec,
    x0: np.ndarray,
    f0: float,
    initial_step: float,
    termination_step: float,
    shrink: float,
    directions: np.ndarray,
    budget: _Budget,
) -> tuple[np.ndarray, float]:
    """Compass-style refinement; monotone, projected, ball-constrained.

    Trial points are projected into the set after every step and rejected
    when they leave the truncation ball.  Among improving directions the
    best value wins (first one on ties); with no improvement the step
    shrinks until it passes ``termination_step`` or the budget runs out.
    """
    x, fx = np.asarray(x0, dtype=float), float(f0)
    step = float(initial_step)
    ball_tol = 1e-12 * max(1.0, radius)
    size = norm_spec.scalar_norm
    while step > termination_step:
        best_x, best_f = None, fx
        for d in directions:
            trial = domain.project(x + step * d)
            if size(trial) > radius + ball_tol:
                continue
            if budget.take() < 1:
                return x, fx
            ft = float(objective(trial))
            if ft < best_f:
                best_x, best_f = trial, ft
        if best_x is None:
            step *= shrink
        else:
            x, fx = best_x, best_f
    return x, fx


def _cluster(
    points: Sequence[np.ndarray],
    values: Sequence[float],
    value_tolerance: float,
    separation: float,
    norm_spec: NormSpec,
) -> tuple[Cluster, ...]:
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    best = values[order[0]]
    reps: list[tuple[np.ndarray, float]] = []
    for i in order:
        if values[i] > best + value_tolerance:
            break
        x = points[i]
        if all(norm(x - r, norm_spec) >= separation for r, _ in reps):
            reps.append((x, values[i]))
    return tuple(
        Cluster(point=tuple(float(v) for v in x), value=float(fv)) for x, fv in reps
    )


def _status(
    budget: _Budget, best_point: np.ndarray, radius: float, separation: float,
    norm_spec: NormSpec,
) -> SearchStatus:
    if budget.exhausted:
        return SearchStatus.BUDGET_EXHAUSTED
    if radius - norm(best_point, norm_spec) <= separation:
        # The incumbent sits on the truncation shell: either the radius is
        # wrong or the objective keeps decreasing outward (no minimum).
        return SearchStatus.NO_MINIMUM_SUSPECTED
    return SearchStatus.OK


def global_minimize(
    objective: Callable[[np.ndarray], float],
    domain: FeasibleSet,
    radius: float,
    config: OptimizeConfig,
    norm_spec: NormSpec | None = None,
    objective_rows: Callable[[np.ndarray], np.ndarray] | None = None,
) -> MinimizationResult:
    """Global minimization of ``objective`` over X within the ball of the
    ambient norm (Euclidean when ``norm_spec`` is omitted).

    ``objective_rows``, when provided, evaluates a (k, n) batch and is used
    for the coarse grid scan; each row counts against the budget.
    """
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    n = domain.dimension
    if norm_spec is None:
        norm_spec = NormSpec(n, 2.0)
    budget = _Budget(config.budget)
    window = SampleDomain(domain, norm_spec, float(radius), config.coarse_grid)
    grid = window.grid_points()
    if len(grid) == 0:
        raise InfeasibleTruncation(
            f"no feasible grid point inside the ball of radius {radius}"
        )
    k = budget.take(len(grid))
    grid = grid[:k]
    if k == 0:
        raise InfeasibleTruncation("budget too small to scan a single grid point")
    if objective_rows is not None:
        grid_values = np.asarray(objective_rows(grid), dtype=float)
    else:
        grid_values = np.array([float(objective(x)) for x in grid])

    order = np.argsort(grid_values, kind="stable")
    starts: list[tuple[np.ndarray, float]] = [
        (grid[i], float(grid_values[i])) for i in order[: config.multistart]
    ]
    rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, _STREAM_STARTS])
    )
    for x in window.random_points(config.multistart, rng):
        if budget.take() < 1:
            break
        starts.append((x, float(objective(x))))

    step0 = config.initial_step if config.initial_step is not None else radius / 10.0
    dirs = direction_set(n, config.directions)
    endpoints: list[np.ndarray] = []
    endpoint_values: list[float] = []
    for x0, f0 in starts:
        if budget.exhausted:
            x, fx = x0, f0
        else:
            x, fx = pattern_search(
                objective,
                domain,
                radius,
                norm_spec,
                x0,
                f0,
                step0,
                config.termination_step,
                config.shrink,
                dirs,
                budget,
            )
        endpoints.append(x)
        endpoint_values.append(fx)

    clusters = _cluster(
        endpoints, endpoint_values, config.value_tolerance, config.separation, norm_spec
    )
    best = clusters[0]
    return MinimizationResult(
        clusters=clusters,
        global_value=best.value,
        status=_status(budget, best.point_array, radius, config.separation, norm_spec),
        evaluations=budget.used,
        radius=float(radius),
        value_tolerance=config.value_tolerance,
        separation=config.separation,
    )


def brute_force_minima(
    objective: Callable[[np.ndarray], float],
    domain: FeasibleSet,
    radius: float,
    resolution: int,
    value_tolerance: float = 1e-6,
    separation: float = 1e-3,
    norm_spec: NormSpec | None = None,
    objective_rows: Callable[[np.ndarray], np.ndarray] | None = None,
) -> MinimizationResult:
    """Exhaustive scan of the feasible grid; the independent oracle.

    No projection and no refinement: grid points are membership-filtered,
    evaluated in lexicographic order, and clustered with the same rule as
    :func:`global_minimize`.
    """
    n = domain.dimension
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if resolution ** n > 10 ** 8:
        raise ValueError("resolution**dimension exceeds the 1e8 guard")
    if norm_spec is None:
        norm_spec = NormSpec(n, 2.0)

    axis = np.linspace(-radius, radius, resolution)
    ball_tol = 1e-12 * max(1.0, radius)
    evaluations = 0
    best_value = np.inf
    cand_pts: list[np.ndarray] = []
    cand_vals: list[float] = []

    chunk = max(1, min(resolution ** n, 65536 // max(n, 1)))
    shape = (resolution,) * n
    total = resolution ** n
    from .spaces import norms_of_rows

    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        coords = np.column_stack(
            [axis[a] for a in np.unravel_index(idx, shape)]
        )
        feasible = domain.violations_of_rows(coords) <= 1e-12
        coords = coords[feasible]
        if len(coords) == 0:
            continue
        coords = coords[norms_of_rows(coords, norm_spec) <= radius + ball_tol]
        if len(coords) == 0:
            continue
        if objective_rows is not None:
            vals = np.asarray(objective_rows(coords), dtype=float)
        else:
            vals = np.array([float(objective(x)) for x in coords])
        evaluations += len(coords)
        lo = float(vals.min())
        if lo < best_value:
            best_value = lo
            keep = [
                i for i, v in enumerate(cand_vals) if v <= best_value + value_tolerance
            ]
            cand_pts = [cand_pts[i] for i in keep]
            cand_vals = [cand_vals[i] for i in keep]
        mask = vals <= best_value + value_tolerance
        cand_pts.extend(coords[mask])
        cand_vals.extend(float(v) for v in vals[mask])

    if evaluations == 0:
        raise InfeasibleTruncation(
            f"no feasible grid point inside the ball of radius {radius}"
        )
    clusters = _cluster(cand_pts, cand_vals, value_tolerance, separation, norm_spec)
    best = clusters[0]
    if radius - norm(best.point_array, norm_spec) <= separation:
        status = SearchStatus.NO_MINIMUM_SUSPECTED
    else:
        status = SearchStatus.OK
    return MinimizationResult(
        clusters=clusters,
        global_value=best.value,
        status=status,
        evaluations=evaluations,
        radius=float(radius),
        value_tolerance=float(value_tolerance),
        separation=float(separation),
    )
