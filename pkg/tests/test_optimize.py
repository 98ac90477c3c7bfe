import numpy as np
import pytest

from helpers import affine_instance

from tiltlab import (
    AffineMap,
    FullSpace,
    InfeasibleTruncation,
    NormSpec,
    OptimizeConfig,
    Orthant,
    SearchStatus,
    TiltedFunctional,
    analytic_fixed_point,
    brute_force_minima,
    contains,
    global_minimize,
    norm,
    planted_double_well,
)
from tiltlab.optimize import direction_set, pattern_search, _Budget


def double_well(x):
    return (x[0] ** 2 - 1.0) ** 2


def quarter_tilt(y):
    F = TiltedFunctional(
        NormSpec(1, 2.0), FullSpace(1), AffineMap(1, matrix=((0.25,),), offset=(0.0,))
    )
    return F.tilt_objective(np.array([y]))


CFG = OptimizeConfig(coarse_grid=33, multistart=8, seed=3)


def test_double_well_two_clusters():
    res = global_minimize(double_well, FullSpace(1), 2.0, CFG)
    assert res.cluster_count == 2
    points = sorted(c.point[0] for c in res.clusters)
    assert points == pytest.approx([-1.0, 1.0], abs=1e-6)
    assert res.global_value == pytest.approx(0.0, abs=1e-12)
    assert res.status is SearchStatus.OK


def test_tilt_instance_single_cluster():
    # piecewise analysis: J(x, 4) = 0.75|x| - |4 - 0.25 x| >= 0.5|x| - 4,
    # equality only at x = 0
    obj = quarter_tilt(4.0)
    xs = np.linspace(-2, 2, 2001)
    assert all(obj(np.array([x])) >= 0.5 * abs(x) - 4.0 - 1e-12 for x in xs)
    res = global_minimize(obj, FullSpace(1), 2.0, CFG)
    assert res.cluster_count == 1
    assert res.clusters[0].point[0] == pytest.approx(0.0, abs=1e-8)
    assert res.global_value == pytest.approx(-4.0, abs=1e-9)


def test_displacement_matches_analytic_fixed_point():
    F = TiltedFunctional(
        NormSpec(2, 2.0),
        FullSpace(2),
        AffineMap(2, matrix=((0.3, 0.0), (0.0, 0.2)), offset=(1.0, 1.0)),
    )
    res = global_minimize(
        F.displacement_objective(),
        FullSpace(2),
        10.0,
        CFG,
        norm_spec=F.norm,
        objective_rows=F.displacements,
    )
    assert res.cluster_count == 1
    assert np.allclose(res.best_point, analytic_fixed_point(F.mapping), atol=1e-6)
    assert res.global_value <= 1e-8


def test_brute_force_examples():
    res = brute_force_minima(double_well, FullSpace(1), 2.0, 4001)
    assert res.cluster_count == 2
    points = sorted(c.point[0] for c in res.clusters)
    assert points == pytest.approx([-1.0, 1.0], abs=1e-3)

    res2 = brute_force_minima(quarter_tilt(4.0), FullSpace(1), 2.0, 4001)
    assert res2.cluster_count == 1
    assert res2.clusters[0].point[0] == pytest.approx(0.0, abs=1e-3)
    assert res2.global_value == pytest.approx(-4.0, abs=1e-3)

    res3 = brute_force_minima(
        lambda x: float(np.abs(x).sum()), Orthant(2), 1.0, 101, norm_spec=NormSpec(2, 2.0)
    )
    assert res3.cluster_count == 1
    assert res3.clusters[0].point == (0.0, 0.0)
    assert res3.global_value == 0.0


def test_brute_force_guard():
    with pytest.raises(ValueError, match="guard"):
        brute_force_minima(double_well, FullSpace(3), 1.0, 100_000)


def test_monotone_refinement():
    rng = np.random.default_rng(9)
    dirs = direction_set(2, "auto")
    for _ in range(20):
        x0 = rng.uniform(-2, 2, 2)
        f0 = float((x0 @ x0 - 1.0) ** 2)
        budget = _Budget(10_000)
        x, fx = pattern_search(
            lambda z: float((z @ z - 1.0) ** 2),
            FullSpace(2),
            4.0,
            NormSpec(2, 2.0),
            x0,
            f0,
            0.4,
            1e-9,
            0.5,
            dirs,
            budget,
        )
        assert fx <= f0


def test_determinism_bitwise():
    cfg = OptimizeConfig(coarse_grid=17, multistart=6, seed=42)
    a = global_minimize(double_well, FullSpace(1), 2.0, cfg)
    b = global_minimize(double_well, FullSpace(1), 2.0, cfg)
    assert a == b
    c = global_minimize(
        quarter_tilt(1.0), Orthant(1), 3.0, cfg, norm_spec=NormSpec(1, 2.0)
    )
    d = global_minimize(
        quarter_tilt(1.0), Orthant(1), 3.0, cfg, norm_spec=NormSpec(1, 2.0)
    )
    assert c == d


def test_feasibility_of_representatives():
    cfg = OptimizeConfig(coarse_grid=17, multistart=6, seed=1)
    dom = Orthant(2)
    spec = NormSpec(2, 1.0)
    res = global_minimize(
        lambda x: float((x[0] - 3.0) ** 2 + (x[1] - 3.0) ** 2),
        dom,
        2.0,
        cfg,
        norm_spec=spec,
    )
    for c in res.clusters:
        p = c.point_array
        assert contains(dom, p, 1e-9)
        assert norm(p, spec) <= res.radius + 1e-9


def test_cluster_soundness_recheck():
    cfg = OptimizeConfig(coarse_grid=33, multistart=12, seed=11)
    res = global_minimize(double_well, FullSpace(1), 2.0, cfg)
    best = res.global_value
    spec = NormSpec(1, 2.0)
    for c in res.clusters:
        assert c.value <= best + cfg.value_tolerance
    pts = [c.point_array for c in res.clusters]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            assert norm(pts[i] - pts[j], spec) >= cfg.separation


def test_budget_exhaustion_status():
    cfg = OptimizeConfig(coarse_grid=33, multistart=4, budget=40, seed=0)
    res = global_minimize(double_well, FullSpace(1), 2.0, cfg)
    assert res.status is SearchStatus.BUDGET_EXHAUSTED
    assert res.evaluations <= 40
    assert res.cluster_count >= 1


def test_no_minimum_suspected_on_boundary_drift():
    # objective decreasing outward: the incumbent lands on the shell
    cfg = OptimizeConfig(coarse_grid=17, multistart=4, seed=0)
    res = global_minimize(lambda x: -abs(float(x[0])), FullSpace(1), 5.0, cfg)
    assert res.status is SearchStatus.NO_MINIMUM_SUSPECTED


def test_infeasible_truncation():
    far = Orthant(1, lower=(10.0,))
    with pytest.raises(InfeasibleTruncation):
        global_minimize(lambda x: 0.0, far, 1.0, CFG)
    with pytest.raises(InfeasibleTruncation):
        brute_force_minima(lambda x: 0.0, far, 1.0, 101)


def test_oracle_agreement_spot():
    # 1-D instances at oracle resolution 4001, 2-D at 401
    cfg = OptimizeConfig(coarse_grid=33, multistart=8, seed=5)
    cases = [
        (double_well, FullSpace(1), 2.0),
        (quarter_tilt(4.0), FullSpace(1), 2.0),
        (quarter_tilt(-2.0), FullSpace(1), 3.0),
    ]
    for obj, dom, radius in cases:
        mine = global_minimize(obj, dom, radius, cfg)
        oracle = brute_force_minima(obj, dom, radius, 4001)
        spacing = 2 * radius / 4000
        assert mine.cluster_count == oracle.cluster_count
        assert abs(mine.global_value - oracle.global_value) <= max(1e-6, 10 * spacing)


def test_planted_double_well_shape():
    g = planted_double_well(2, spread=2.0)
    assert g(np.array([1.0, 0.0])) == 0.0
    assert g(np.array([-1.0, 0.0])) == 0.0
    assert g(np.array([0.0, 0.0])) > 0.0
    assert g(np.array([1.0, 0.5])) > 0.0


def test_direction_sets():
    axes = direction_set(3, "axes")
    assert axes.shape == (6, 3)
    full = direction_set(2, "full")
    assert full.shape == (8, 2)
    auto5 = direction_set(5, "auto")  # 3^5 - 1 = 242 > 80: axes + diagonals
    assert len(auto5) == 2 * 5 + 4 * 10


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizeConfig(shrink=1.5)
    with pytest.raises(ValueError):
        OptimizeConfig(separation=1e-10, termination_step=1e-9)
    with pytest.raises(ValueError):
        OptimizeConfig(seed=-1)
    with pytest.raises(ValueError):
        OptimizeConfig(directions="spiral")
