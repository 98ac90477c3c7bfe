"""Counterexample sweeps: instantiate a map family over a parameter grid,
screen each instance by its growth ratio, run the per-probe uniqueness step,
and keep only two-cluster findings that survive re-verification at four
times the grid resolution with the value window halved.

A sweep cell is one (parameter point, norm, probe y) triple.  Cells are
independent and may run in worker processes; outcomes are merged in cell
index order, so the result does not depend on the worker count.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .experiments import _prescan_incumbent, effective_growth_bound
from .functional import TiltedFunctional, coercivity_radius
from .maps import AffineMap, GrowthEstimate, MapSpec, growth_coefficient
from .optimize import Cluster, MinimizationResult, OptimizeConfig, global_minimize
from .spaces import INF, FeasibleSet, MaxNorm, NormSpec, norm

_REVERIFY_FACTOR = 4
_SCORE_FLOOR = 1e-12


@dataclass(frozen=True)
class MapFamily:
    """A parameterized map template; ``parameters`` maps each swept name to
    its grid of values, in sweep order."""

    kind: str
    dimension: int
    parameters: tuple[tuple[str, tuple[float, ...]], ...]
    offset: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_BUILDERS:
            raise ValueError(
                f"unknown family '{self.kind}'; known: {sorted(FAMILY_BUILDERS)}"
            )
        params = tuple(
            (str(name), tuple(float(v) for v in values))
            for name, values in self.parameters
        )
        if not params or any(not values for _, values in params):
            raise ValueError("every swept parameter needs at least one value")
        object.__setattr__(self, "parameters", params)
        if self.offset is not None:
            b = tuple(float(v) for v in self.offset)
            if len(b) != self.dimension:
                raise ValueError("offset length mismatch")
            object.__setattr__(self, "offset", b)

    def parameter_points(self) -> list[tuple[tuple[str, float], ...]]:
        names = [name for name, _ in self.parameters]
        grids = [values for _, values in self.parameters]
        return [
            tuple(zip(names, combo)) for combo in itertools.product(*grids)
        ]

    def instantiate(self, point: tuple[tuple[str, float], ...]) -> MapSpec:
        values = dict(point)
        offset = self.offset if self.offset is not None else (0.0,) * self.dimension
        return FAMILY_BUILDERS[self.kind](self.dimension, values, offset)


def _build_scaled_identity(n: int, params: dict, offset) -> MapSpec:
    theta = params["theta"]
    matrix = tuple(
        tuple(theta if i == j else 0.0 for j in range(n)) for i in range(n)
    )
    return AffineMap(dimension=n, matrix=matrix, offset=offset)


def _build_rotation_scale(n: int, params: dict, offset) -> MapSpec:
    if n != 2:
        raise ValueError("rotation_scale family is two-dimensional")
    theta, phi = params["theta"], params["phi"]
    c, s = float(np.cos(phi)), float(np.sin(phi))
    matrix = ((theta * c, -theta * s), (theta * s, theta * c))
    return AffineMap(dimension=2, matrix=matrix, offset=offset)


def _build_diagonal(n: int, params: dict, offset) -> MapSpec:
    diag = [params[f"d{i}"] for i in range(n)]
    matrix = tuple(
        tuple(diag[i] if i == j else 0.0 for j in range(n)) for i in range(n)
    )
    return AffineMap(dimension=n, matrix=matrix, offset=offset)


FAMILY_BUILDERS = {
    "scaled_identity": _build_scaled_identity,
    "rotation_scale": _build_rotation_scale,
    "diagonal": _build_diagonal,
}


def planted_double_well(dimension: int, x0=None, spread: float = 1.0):
    """Objective with exactly two tied global minima ``spread`` apart along
    the first axis; the standard plant for validating the multiplicity
    detector."""
    center = np.zeros(dimension) if x0 is None else np.asarray(x0, dtype=float)
    half = spread / 2.0

    def objective(x: np.ndarray) -> float:
        d = np.asarray(x, dtype=float) - center
        rest = float(np.dot(d[1:], d[1:]))
        return (d[0] * d[0] - half * half) ** 2 + rest

    return objective


@dataclass(frozen=True)
class CellDescriptor:
    index: int
    params: tuple[tuple[str, float], ...]
    norm_p: float | MaxNorm
    y: tuple[float, ...]
    param_index: int
    norm_index: int


@dataclass(frozen=True)
class CellSummary:
    index: int
    params: tuple[tuple[str, float], ...]
    norm_p: float | MaxNorm
    y: tuple[float, ...]
    screened_out: bool
    kappa_hat: float | None
    radius: float | None
    cluster_count: int
    best_value: float | None


@dataclass(frozen=True)
class CounterexampleCandidate:
    """A surviving two-cluster finding with full provenance."""

    cell_index: int
    params: tuple[tuple[str, float], ...]
    norm_p: float | MaxNorm
    y: tuple[float, ...]
    clusters: tuple[Cluster, ...]
    value_gap: float
    separation: float
    score: float
    status: str
    kappa_method: str
    radius: float
    seed: int
    value_tolerance: float


@dataclass(frozen=True)
class SweepResult:
    candidates: tuple[CounterexampleCandidate, ...]
    summaries: tuple[CellSummary, ...]
    cells_total: int
    cells_screened_out: int
    findings_raw: int
    seed: int
    value_tolerance: float
    separation: float


@dataclass(frozen=True)
class _SweepContext:
    family: MapFamily
    domain: FeasibleSet
    config: OptimizeConfig
    margin: float
    fallback_radius: float
    growth_radii: tuple[float, ...]
    growth_directions: int
    seed: int
    planted_cell: int | None
    planted_spread: float


def _certify_cell(
    F: TiltedFunctional,
    y: np.ndarray,
    kappa_info: GrowthEstimate,
    config: OptimizeConfig,
    margin: float,
    seed_index: int,
) -> tuple[float, MinimizationResult]:
    kappa_eff, r0 = effective_growth_bound(kappa_info)
    incumbent = _prescan_incumbent(F, y, config.seed, seed_index)
    radius = max(coercivity_radius(F, y, kappa_eff, r0, incumbent, margin), 1.0)
    result = global_minimize(
        F.tilt_objective(y),
        F.domain,
        radius,
        config,
        norm_spec=F.norm,
        objective_rows=lambda X: F.values_for_xs(X, y),
    )
    return radius, result


def _candidate_metrics(
    result: MinimizationResult, norm_spec: NormSpec
) -> tuple[float, float]:
    values = [c.value for c in result.clusters]
    value_gap = float(max(values) - min(values))
    points = [c.point_array for c in result.clusters]
    separation = min(
        norm(a - b, norm_spec)
        for i, a in enumerate(points)
        for b in points[i + 1 :]
    )
    return value_gap, float(separation)


def _run_cell(ctx: _SweepContext, cell: CellDescriptor):
    """One sweep cell; returns (summary, candidate-or-None, raw_finding)."""
    norm_spec = NormSpec(ctx.family.dimension, cell.norm_p)
    map_spec = ctx.family.instantiate(cell.params)
    y = np.array(cell.y, dtype=float)
    planted = ctx.planted_cell is not None and ctx.planted_cell == cell.index

    if planted:
        objective = planted_double_well(ctx.family.dimension, spread=ctx.planted_spread)
        radius = ctx.fallback_radius
        result = global_minimize(
            objective, ctx.domain, radius, ctx.config, norm_spec=norm_spec
        )
        kappa_info = None
        kappa_hat = None
        kappa_method = "planted"
    else:
        kappa_info = growth_coefficient(
            map_spec,
            norm_spec,
            ctx.growth_radii,
            ctx.growth_directions,
            seed=ctx.seed + 7919 * ctx_param_key(cell),
            domain=ctx.domain,
        )
        kappa_hat = kappa_info.kappa_hat
        kappa_method = kappa_info.method.value
        if not kappa_info.satisfied:
            summary = CellSummary(
                index=cell.index,
                params=cell.params,
                norm_p=cell.norm_p,
                y=cell.y,
                screened_out=True,
                kappa_hat=kappa_hat,
                radius=None,
                cluster_count=0,
                best_value=None,
            )
            return summary, None, False
        F = TiltedFunctional(norm=norm_spec, domain=ctx.domain, mapping=map_spec)
        radius, result = _certify_cell(
            F, y, kappa_info, ctx.config, ctx.margin, cell.index
        )

    summary = CellSummary(
        index=cell.index,
        params=cell.params,
        norm_p=cell.norm_p,
        y=cell.y,
        screened_out=False,
        kappa_hat=kappa_hat,
        radius=radius,
        cluster_count=result.cluster_count,
        best_value=result.global_value,
    )
    if result.cluster_count < 2:
        return summary, None, False

    # Re-verify at finer resolution with the value window halved; most
    # coarse two-cluster findings are optimizer artifacts.
    finer = replace(
        ctx.config,
        coarse_grid=_REVERIFY_FACTOR * ctx.config.coarse_grid,
        value_tolerance=ctx.config.value_tolerance / 2.0,
    )
    if planted:
        objective = planted_double_well(ctx.family.dimension, spread=ctx.planted_spread)
        fine_result = global_minimize(
            objective, ctx.domain, radius, finer, norm_spec=norm_spec
        )
    else:
        F = TiltedFunctional(norm=norm_spec, domain=ctx.domain, mapping=map_spec)
        _, fine_result = _certify_cell(F, y, kappa_info, finer, ctx.margin, cell.index)
    if fine_result.cluster_count < 2:
        return summary, None, True

    value_gap, separation = _candidate_metrics(fine_result, norm_spec)
    candidate = CounterexampleCandidate(
        cell_index=cell.index,
        params=cell.params,
        norm_p=cell.norm_p,
        y=cell.y,
        clusters=fine_result.clusters,
        value_gap=value_gap,
        separation=separation,
        score=separation / (value_gap + _SCORE_FLOOR),
        status=f"confirmed_at_{_REVERIFY_FACTOR}x",
        kappa_method=kappa_method,
        radius=radius,
        seed=ctx.config.seed,
        value_tolerance=finer.value_tolerance,
    )
    return summary, candidate, True


def ctx_param_key(cell: CellDescriptor) -> int:
    return cell.param_index * 1009 + cell.norm_index


def search_counterexample(
    family: MapFamily,
    norms: list[float | MaxNorm],
    domain: FeasibleSet,
    y_points,
    config: OptimizeConfig,
    margin: float = 1.0,
    fallback_radius: float = 10.0,
    growth_radii=(100.0, 1_000.0, 10_000.0),
    growth_directions: int = 32,
    jobs: int = 1,
    planted_cell: int | None = None,
    planted_spread: float = 2.0,
) -> SweepResult:
    """Sweep (parameter point, norm exponent, probe y) cells hunting for
    two-cluster instances of J(., y).

    Instances whose growth ratio is not certified below 1/2 are screened out
    and counted.  ``planted_cell`` replaces the objective of one cell by the
    built-in tied double well, which must yield exactly one candidate; this
    validates the detector inside the sweep machinery.  An empty candidate
    list is a valid outcome.
    """
    y_arr = np.asarray(y_points, dtype=float)
    if y_arr.ndim != 2 or y_arr.shape[1] != family.dimension:
        raise ValueError("y_points must be a (k, dimension) array")
    if len(y_arr) == 0:
        raise ValueError("y_points must be non-empty")
    points = family.parameter_points()
    cells = [
        CellDescriptor(
            index=i,
            params=params,
            norm_p=p,
            y=tuple(float(v) for v in y),
            param_index=pi,
            norm_index=ni,
        )
        for i, (pi, params, ni, p, y) in enumerate(
            (pi, params, ni, p, y)
            for pi, params in enumerate(points)
            for ni, p in enumerate(norms)
            for y in y_arr
        )
    ]
    ctx = _SweepContext(
        family=family,
        domain=domain,
        config=config,
        margin=float(margin),
        fallback_radius=float(fallback_radius),
        growth_radii=tuple(float(r) for r in growth_radii),
        growth_directions=int(growth_directions),
        seed=config.seed,
        planted_cell=planted_cell,
        planted_spread=float(planted_spread),
    )
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            outcomes = list(pool.map(_cell_worker, [(ctx, c) for c in cells], chunksize=8))
    else:
        outcomes = [_run_cell(ctx, c) for c in cells]

    summaries = tuple(o[0] for o in outcomes)
    candidates = [o[1] for o in outcomes if o[1] is not None]
    findings_raw = sum(1 for o in outcomes if o[2])
    candidates.sort(key=lambda c: (-c.score, c.cell_index))
    return SweepResult(
        candidates=tuple(candidates),
        summaries=summaries,
        cells_total=len(cells),
        cells_screened_out=sum(1 for s in summaries if s.screened_out),
        findings_raw=findings_raw,
        seed=config.seed,
        value_tolerance=config.value_tolerance,
        separation=config.separation,
    )


def _cell_worker(bundle):
    ctx, cell = bundle
    return _run_cell(ctx, cell)
