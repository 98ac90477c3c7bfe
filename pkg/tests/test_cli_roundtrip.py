"""Round-trip and dispatch coverage across set variants and map families."""

import itertools

import numpy as np
import pytest

from tiltlab.cli import main
from tiltlab.configfile import build_experiment, config_to_document, parse_document

SET_BLOCKS = {
    "full_space": "set.variant = full_space\n",
    "orthant": "set.variant = orthant\nset.lower = -1 0\n",
    "half_space": "set.variant = half_space\nset.normal = 1 1\nset.offset = -3\n",
    "cone": (
        "set.variant = cone\n"
        "set.halfspaces = 2\n"
        "set.halfspace.0.normal = 1 0\n"
        "set.halfspace.0.offset = 0\n"
        "set.halfspace.1.normal = 0 1\n"
        "set.halfspace.1.offset = 0\n"
        "set.ray = 1 1\n"
        "set.base = 0 0\n"
    ),
}

MAP_BLOCKS = {
    "affine": (
        "map.family = affine\n"
        "map.matrix.shape = 2 2\n"
        "map.matrix.data = 0.25 0.1 0 0.3\n"
        "map.offset = 0.5 0.25\n"
    ),
    "constant": "map.family = constant\nmap.value = 0.5 0.25\n",
    "affine_bounded": (
        "map.family = affine_bounded\n"
        "map.matrix.shape = 2 2\n"
        "map.matrix.data = 0.25 0 0 0.3\n"
        "map.offset = 0.5 0.25\n"
        "map.field = tanh\n"
        "map.amplitude = 0.125\n"
    ),
    "projected": (
        "map.family = projected\n"
        "map.inner.family = affine\n"
        "map.inner.matrix.shape = 2 2\n"
        "map.inner.matrix.data = 0.25 0 0 0.3\n"
        "map.inner.offset = 0.5 0.25\n"
    ),
}

NORM_BLOCKS = {
    "lp2": "space.norm = lp\nspace.p = 2\n",
    "lp1": "space.norm = lp\nspace.p = 1\n",
    "lpinf": "space.norm = lp\nspace.p = inf\n",
    "weighted": "space.norm = weighted_lp\nspace.p = 2\nspace.weights = 1 2\n",
}


@pytest.mark.parametrize(
    "set_name,map_name,norm_name",
    list(
        itertools.product(SET_BLOCKS, MAP_BLOCKS, ["lp2"])
    )
    + list(itertools.product(["full_space"], ["affine"], NORM_BLOCKS)),
)
def test_roundtrip_matrix(set_name, map_name, norm_name):
    text = (
        "kind = certify_uniqueness\nseed = 1\nspace.dimension = 2\n"
        + NORM_BLOCKS[norm_name]
        + SET_BLOCKS[set_name]
        + MAP_BLOCKS[map_name]
    )
    cfg = build_experiment(parse_document(text))
    doc = config_to_document(cfg)
    cfg2 = build_experiment(dict(doc))
    assert cfg == cfg2
    assert config_to_document(cfg2) == doc


VERIFY_SADDLE_CONFIG = """
kind = verify_saddle
seed = 2
space.dimension = 1
space.p = 2
set.variant = full_space
map.family = affine
map.matrix.shape = 1 1
map.matrix.data = 0.25
map.offset = 0
saddle.x_star = 0
saddle.tolerance = 1e-9
sampling.radius = 4
sampling.resolution = 81
"""


def test_cli_verify_saddle(tmp_path):
    path = tmp_path / "vs.cfg"
    path.write_text(VERIFY_SADDLE_CONFIG)
    out = tmp_path / "out"
    code = main(["run", "--config", str(path), "--out", str(out)])
    assert code == 0
    doc = parse_document((out / "report.txt").read_text())
    assert doc["report.row_ok"] == "true"
    assert doc["report.column_nonneg_ok"] == "true"
    assert doc["report.column_strict_ok"] == "true"
    assert float(doc["report.row_max"]) <= 1e-9
    assert (out / "extremes.tsv").exists()


MINIMAX_CONFIG = """
kind = minimax_gap
seed = 2
space.dimension = 1
space.p = 2
set.variant = full_space
map.family = affine
map.matrix.shape = 1 1
map.matrix.data = 0.25
map.offset = 0
optimizer.multistart = 2
sampling.radius = 8
sampling.resolution = 17
"""


def test_cli_minimax(tmp_path):
    path = tmp_path / "mm.cfg"
    path.write_text(MINIMAX_CONFIG)
    out = tmp_path / "out"
    code = main(["run", "--config", str(path), "--out", str(out)])
    assert code == 0
    doc = parse_document((out / "report.txt").read_text())
    assert abs(float(doc["report.upper"])) <= 1e-4
    assert abs(float(doc["report.gap"])) <= 1e-4
    assert doc["report.boundary_max_flag"] == "false"


def test_cli_weighted_norm_run(tmp_path):
    text = (
        "kind = find_fixed_point\nseed = 4\nspace.dimension = 2\n"
        + NORM_BLOCKS["weighted"]
        + "set.variant = full_space\n"
        + MAP_BLOCKS["affine"]
        + "optimizer.coarse_grid = 15\noptimizer.multistart = 4\n"
        + "sampling.check_samples = 32\n"
    )
    path = tmp_path / "w.cfg"
    path.write_text(text)
    out = tmp_path / "out"
    code = main(["run", "--config", str(path), "--out", str(out)])
    assert code == 0
    doc = parse_document((out / "report.txt").read_text())
    assert float(doc["report.residual"]) <= 1e-6
    assert doc["report.kappa_method"] == "sampled"
