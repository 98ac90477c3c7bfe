"""Shared seeded instance factories for the test suite."""

from __future__ import annotations

import numpy as np

from tiltlab import (
    INF,
    AffineMap,
    FullSpace,
    NormSpec,
    OptimizeConfig,
    Orthant,
    TiltedFunctional,
    growth_coefficient,
    induced_operator_norm,
)

SUITE_SEED = 20250809


def affine_instance(index: int) -> TiltedFunctional:
    """Seeded affine instance: dimension cycles 1/2/3, norm cycles 1/2/inf,
    set alternates full space / nonnegative orthant (maps ranged into it)."""
    rng = np.random.default_rng(np.random.SeedSequence([SUITE_SEED, index]))
    n = (1, 2, 3)[index % 3]
    p = (1.0, 2.0, INF)[(index // 3) % 3]
    orthant = index % 2 == 1
    spec = NormSpec(n, p)
    target = 0.2 + 0.2 * float(rng.uniform())
    M = rng.uniform(-1.0, 1.0, (n, n))
    if orthant:
        M = np.abs(M)
    k = induced_operator_norm(M, spec)
    A = M * (target / k)
    if orthant:
        b = rng.uniform(0.2, 1.0, n)
        domain = Orthant(n)
    else:
        b = rng.uniform(-1.0, 1.0, n)
        domain = FullSpace(n)
    mapping = AffineMap(n, matrix=tuple(map(tuple, A)), offset=tuple(b))
    return TiltedFunctional(norm=spec, domain=domain, mapping=mapping)


def suite_config(dimension: int, seed: int = 0) -> OptimizeConfig:
    grid = {1: 65, 2: 21, 3: 9}[dimension]
    return OptimizeConfig(
        coarse_grid=grid,
        multistart=8,
        budget=400_000,
        seed=seed,
    )


def instance_growth(F: TiltedFunctional):
    return growth_coefficient(F.mapping, F.norm, domain=F.domain)


def feasible_cloud(F: TiltedFunctional, radius: float, count: int, seed: int):
    """Seeded feasible points inside the ambient ball, for invariant suites."""
    from tiltlab import SampleDomain

    window = SampleDomain(F.domain, F.norm, radius, 3)
    rng = np.random.default_rng(np.random.SeedSequence([SUITE_SEED, 0xC1, seed]))
    pts = window.random_points(count, rng)
    assert len(pts) > 0
    return pts
