"""Catalog of self-maps f: X -> X.

Families: affine maps A x + b, constant maps, affine maps perturbed by a
bounded smooth coordinate field (amplitude-scaled), and maps composed with
the Euclidean projection onto X so the range constraint holds by
construction.  Alongside evaluation the module estimates the asymptotic
growth ratio ||f(x)|| / ||x|| (analytically where the family admits it,
otherwise from seeded shell samples) and solves for analytic fixed points
of affine and constant maps.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, MembershipViolation, RangeViolation
from .spaces import (
    INF,
    FeasibleSet,
    FullSpace,
    NormSpec,
    as_vector,
    norm,
    norms_of_rows,
)

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-9

_SINGULAR_RATIO = 1e-13
_POWER_ITER_TOL = 1e-10
_POWER_ITER_CAP = 200_000

# Bounded smooth vector fields, each component in [-1, 1]; they act on the
# last axis so the same callable serves single vectors and row batches.
FIELD_CATALOG = {
    "sine": lambda x: np.sin(np.roll(x, -1, axis=-1)),
    "tanh": lambda x: np.tanh(x),
    "gauss": lambda x: np.exp(-(x * x)),
}


def _as_matrix(m, dimension) -> tuple[tuple[float, ...], ...]:
    rows = tuple(tuple(float(v) for v in row) for row in m)
    if len(rows) != dimension or any(len(r) != dimension for r in rows):
        raise DimensionMismatch(f"matrix must be {dimension}x{dimension}")
    return rows


@dataclass(frozen=True)
class MapSpec:
    """Base class for the self-map catalog."""

    dimension: int

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "dimension", int(self.dimension))

    @property
    def family(self) -> str:
        raise NotImplementedError

    def raw_value(self, x: np.ndarray, domain: FeasibleSet) -> np.ndarray:
        """f(x) without membership or range checks."""
        raise NotImplementedError

    def raw_rows(self, X: np.ndarray, domain: FeasibleSet) -> np.ndarray:
        return np.vstack([self.raw_value(row, domain) for row in X]) if len(X) else X


@dataclass(frozen=True)
class AffineMap(MapSpec):
    matrix: tuple[tuple[float, ...], ...] = ()
    offset: tuple[float, ...] = ()

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "matrix", _as_matrix(self.matrix, self.dimension))
        b = tuple(float(v) for v in self.offset)
        if len(b) != self.dimension:
            raise DimensionMismatch("offset length mismatch")
        object.__setattr__(self, "offset", b)

    @property
    def family(self) -> str:
        return "affine"

    @cached_property
    def matrix_array(self) -> np.ndarray:
        arr = np.array(self.matrix, dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def offset_array(self) -> np.ndarray:
        arr = np.array(self.offset, dtype=float)
        arr.flags.writeable = False
        return arr

    def raw_value(self, x, domain):
        return self.matrix_array @ x + self.offset_array

    def raw_rows(self, X, domain):
        return X @ self.matrix_array.T + self.offset_array[None, :]


@dataclass(frozen=True)
class ConstantMap(MapSpec):
    value: tuple[float, ...] = ()

    def __post_init__(self):
        super().__post_init__()
        c = tuple(float(v) for v in self.value)
        if len(c) != self.dimension:
            raise DimensionMismatch("constant value length mismatch")
        object.__setattr__(self, "value", c)

    @property
    def family(self) -> str:
        return "constant"

    @cached_property
    def value_array(self) -> np.ndarray:
        arr = np.array(self.value, dtype=float)
        arr.flags.writeable = False
        return arr

    def raw_value(self, x, domain):
        return self.value_array.copy()

    def raw_rows(self, X, domain):
        return np.tile(self.value_array, (len(X), 1))


@dataclass(frozen=True)
class BoundedPerturbedMap(MapSpec):
    """Affine map plus an amplitude-scaled bounded smooth field."""

    matrix: tuple[tuple[float, ...], ...] = ()
    offset: tuple[float, ...] = ()
    field: str = "sine"
    amplitude: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "matrix", _as_matrix(self.matrix, self.dimension))
        b = tuple(float(v) for v in self.offset)
        if len(b) != self.dimension:
            raise DimensionMismatch("offset length mismatch")
        object.__setattr__(self, "offset", b)
        if self.field not in FIELD_CATALOG:
            raise ValueError(
                f"unknown field '{self.field}'; catalog: {sorted(FIELD_CATALOG)}"
            )
        if float(self.amplitude) < 0.0:
            raise ValueError("amplitude must be >= 0")
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def family(self) -> str:
        return "affine_bounded"

    @cached_property
    def matrix_array(self) -> np.ndarray:
        arr = np.array(self.matrix, dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def offset_array(self) -> np.ndarray:
        arr = np.array(self.offset, dtype=float)
        arr.flags.writeable = False
        return arr

    def raw_value(self, x, domain):
        g = FIELD_CATALOG[self.field]
        return self.matrix_array @ x + self.offset_array + self.amplitude * g(x)

    def raw_rows(self, X, domain):
        g = FIELD_CATALOG[self.field]
        return X @ self.matrix_array.T + self.offset_array[None, :] + self.amplitude * g(X)


@dataclass(frozen=True)
class ProjectedMap(MapSpec):
    """Inner map composed with the projection onto X, so the range
    constraint holds by construction."""

    inner: MapSpec | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.inner is None:
            raise ValueError("projected map needs an inner map")
        if self.inner.dimension != self.dimension:
            raise DimensionMismatch("inner map dimension mismatch")

    @property
    def family(self) -> str:
        return "projected"

    def raw_value(self, x, domain):
        return domain.project(self.inner.raw_value(x, domain))

    def raw_rows(self, X, domain):
        return domain.project_rows(self.inner.raw_rows(X, domain))


def evaluate(map_spec: MapSpec, x, domain: FeasibleSet) -> np.ndarray:
    """f(x) with the membership precondition and the range check enforced."""
    arr = as_vector(x, map_spec.dimension)
    if domain.dimension != map_spec.dimension:
        raise DimensionMismatch("map and set dimensions disagree")
    v = domain.violation(arr)
    if v > MEMBERSHIP_TOL:
        raise MembershipViolation(
            f"point is outside the feasible set by {v:.3e} (> {MEMBERSHIP_TOL})"
        )
    value = map_spec.raw_value(arr, domain)
    if not isinstance(map_spec, ProjectedMap):
        rv = domain.violation(value)
        if rv > MEMBERSHIP_TOL:
            raise RangeViolation(
                f"map value leaves the feasible set by {rv:.3e}; the map is "
                "ill-posed for this set",
                point=arr,
                value=value,
                violation=rv,
            )
    return value


def evaluate_rows(
    map_spec: MapSpec, X: np.ndarray, domain: FeasibleSet, check_range: bool = True
) -> np.ndarray:
    """Row-wise f over feasible points; callers guarantee membership."""
    values = map_spec.raw_rows(np.asarray(X, dtype=float), domain)
    if check_range and not isinstance(map_spec, ProjectedMap) and len(values):
        worst = float(domain.violations_of_rows(values).max())
        if worst > MEMBERSHIP_TOL:
            raise RangeViolation(
                f"map values leave the feasible set by {worst:.3e}",
                violation=worst,
            )
    return values


class GrowthMethod(enum.Enum):
    ANALYTIC = "analytic"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class GrowthEstimate:
    """Estimate of the asymptotic ratio limsup ||f(x)||/||x||.

    ``offset_bound`` is a constant B with ||f(x)|| <= kappa_hat * ||x|| + B
    on the evidence available (exact for affine/constant families, a sampled
    estimate otherwise); callers use it to turn the asymptotic ratio into a
    finite-radius bound.
    """

    kappa_hat: float
    method: GrowthMethod
    radii: tuple[float, ...]
    satisfied: bool
    offset_bound: float

    def __post_init__(self):
        if self.kappa_hat < 0.0:
            raise ValueError("kappa_hat must be >= 0")


def _largest_singular_value(A: np.ndarray) -> float:
    """Power iteration on A^T A, relative tolerance 1e-10."""
    n = A.shape[0]
    B = A.T @ A
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.sqrt(np.dot(v, v))
    lam = 0.0
    for _ in range(_POWER_ITER_CAP):
        w = B @ v
        nw = float(np.sqrt(np.dot(w, w)))
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = float(v @ (B @ v))
        if abs(lam_new - lam) <= _POWER_ITER_TOL * max(abs(lam_new), 1e-300):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def induced_operator_norm(matrix, spec: NormSpec) -> float:
    """Operator norm of a matrix for plain lp with p in {1, 2, inf}."""
    A = np.asarray(matrix, dtype=float)
    if spec.weights is not None:
        raise ValueError("closed forms cover plain lp norms only")
    if spec.p is INF:
        return float(np.abs(A).sum(axis=1).max())
    if spec.p == 1.0:
        return float(np.abs(A).sum(axis=0).max())
    if spec.p == 2.0:
        return _largest_singular_value(A)
    raise ValueError("closed forms cover p in {1, 2, inf} only")


def _analytic_growth(map_spec: MapSpec, norm_spec: NormSpec) -> tuple[float, float] | None:
    """(kappa_hat, offset_bound) when the family and the norm admit them."""
    if isinstance(map_spec, ConstantMap):
        return 0.0, norm(map_spec.value_array, norm_spec)
    if isinstance(map_spec, AffineMap):
        if norm_spec.weights is None and (
            norm_spec.p is INF or norm_spec.p in (1.0, 2.0)
        ):
            kappa = induced_operator_norm(map_spec.matrix_array, norm_spec)
            return kappa, norm(map_spec.offset_array, norm_spec)
    return None


def growth_coefficient(
    map_spec: MapSpec,
    norm_spec: NormSpec,
    radii=(100.0, 1_000.0, 10_000.0),
    directions_per_radius: int = 64,
    seed: int = 0,
    domain: FeasibleSet | None = None,
) -> GrowthEstimate:
    """Estimate limsup ||f(x)||/||x|| over growing shells.

    Affine and constant maps under plain lp norms (p in {1, 2, inf}) get the
    exact analytic value; every other combination is sampled on the largest
    shell with seeded directions, points projected into X.  A sampled
    estimate is evidence, not proof, and reports must carry the method tag.
    """
    if map_spec.dimension != norm_spec.dimension:
        raise DimensionMismatch("map and norm dimensions disagree")
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise ValueError("radii must be non-empty")
    if any(r <= 0 for r in radii) or any(
        b <= a for a, b in zip(radii, radii[1:])
    ):
        raise ValueError("radii must be positive and strictly increasing")

    analytic = _analytic_growth(map_spec, norm_spec)
    if analytic is not None:
        kappa, bound = analytic
        return GrowthEstimate(
            kappa_hat=kappa,
            method=GrowthMethod.ANALYTIC,
            radii=radii,
            satisfied=kappa < 0.5,
            offset_bound=bound,
        )

    if radii[-1] < 100.0:
        raise ValueError("sampled estimation needs a largest radius >= 100")
    if domain is None:
        domain = FullSpace(map_spec.dimension)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6702]))
    n = map_spec.dimension
    shells: list[tuple[np.ndarray, np.ndarray]] = []
    for radius in radii:
        dirs = rng.standard_normal((int(directions_per_radius), n))
        lengths = norms_of_rows(dirs, norm_spec)
        keep = lengths > 0.0
        pts = domain.project_rows(radius * dirs[keep] / lengths[keep][:, None])
        sizes = norms_of_rows(pts, norm_spec)
        live = sizes > 1e-9 * radius
        if not live.any():
            continue
        pts, sizes = pts[live], sizes[live]
        values = norms_of_rows(map_spec.raw_rows(pts, domain), norm_spec)
        shells.append((sizes, values))
    if not shells:
        raise ValueError("no feasible shell samples; the window misses the set")
    last_sizes, last_values = shells[-1]
    kappa_hat = float((last_values / last_sizes).max())
    offset_bound = max(
        float((values - kappa_hat * sizes).max()) for sizes, values in shells
    )
    return GrowthEstimate(
        kappa_hat=kappa_hat,
        method=GrowthMethod.SAMPLED,
        radii=radii,
        satisfied=kappa_hat < 0.5,
        offset_bound=max(offset_bound, 0.0),
    )


def analytic_fixed_point(map_spec: MapSpec) -> np.ndarray | None:
    """Exact fixed point for affine (via LU solve of (I - A) x = b, which is
    Gaussian elimination with partial pivoting) and constant maps; absent for
    the other families or when I - A is singular to machine tolerance."""
    if isinstance(map_spec, ConstantMap):
        return map_spec.value_array.copy()
    if isinstance(map_spec, AffineMap):
        M = np.eye(map_spec.dimension) - map_spec.matrix_array
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] <= sv[0] * _SINGULAR_RATIO:
            logger.info("I - A is singular to machine tolerance; no analytic fixed point")
            return None
        return np.linalg.solve(M, map_spec.offset_array)
    return None
