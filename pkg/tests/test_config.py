import math

import pytest

from featurefield import config
from featurefield.config import ConfigError

MINIMAL = """\
[arena]
start = [0.5, 0.5]
goal = [3.5, 0.5]

[camera]
height = 0.4

[field]
lambda = 0.3

[controller]

[tracker]

[run]
seed = 7
"""


def test_bundled_detour_loads():
    sc = config.load(config.bundled("detour"))
    assert sc.name == "detour"
    assert sc.arena_size == (4.0, 3.0)
    assert sc.params.lam == 0.45
    assert math.degrees(sc.params.theta_cs_hat) == pytest.approx(30.0)
    assert sc.rig.width == 720 and sc.rig.height == 480
    assert len(sc.clusters) == 13


def test_defaults_fill_missing_keys():
    sc = config.loads(MINIMAL)
    assert sc.params.r == 50.0 and sc.params.s == 150.0
    assert sc.controller.min_inliers == 8 and sc.controller.patience == 15
    assert sc.controller.cutoff_hz == 20.0 and sc.controller.feature_cap == 100
    assert sc.seed == 7 and sc.grid_step == 8


def test_missing_camera_section_named():
    text = MINIMAL.replace("[camera]\nheight = 0.4\n", "")
    with pytest.raises(ConfigError, match=r"\[camera\]"):
        config.loads(text)


def test_unknown_key_reports_line():
    text = MINIMAL.replace("height = 0.4", "hieght = 0.4")
    with pytest.raises(ConfigError, match=r"camera\.hieght \(line 6\)"):
        config.loads(text)


def test_bad_value_reports_key_and_line():
    text = MINIMAL.replace("lambda = 0.3", "lambda = 1.7")
    with pytest.raises(ConfigError, match="field"):
        config.loads(text)
    text = MINIMAL.replace("height = 0.4", 'height = "high"')
    with pytest.raises(ConfigError, match=r"camera\.height \(line 6\)"):
        config.loads(text)


def test_missing_required_key():
    with pytest.raises(ConfigError, match="arena.goal"):
        config.loads(MINIMAL.replace("goal = [3.5, 0.5]\n", ""))


def test_start_outside_arena():
    with pytest.raises(ConfigError, match="arena.start"):
        config.loads(MINIMAL.replace("start = [0.5, 0.5]", "start = [9.0, 0.5]"))


def test_toml_syntax_error():
    with pytest.raises(ConfigError, match="line"):
        config.loads(MINIMAL + "\n[broken\n")


def test_overrides_apply():
    sc = config.loads(MINIMAL, ["field.lambda=1.0", "run.seed=3", "controller.max_speed=0.25"])
    assert sc.params.lam == 1.0 and sc.seed == 3 and sc.controller.max_speed == 0.25


@pytest.mark.parametrize("bad", ["field.lambda", "nosuch.key=1", "field.nosuch=1", "lambda=1"])
def test_bad_overrides(bad):
    with pytest.raises(ConfigError):
        config.loads(MINIMAL, [bad])


def test_stride_larger_than_sensor():
    with pytest.raises(ConfigError, match="fieldmap.step"):
        config.loads(MINIMAL, ["fieldmap.step=1000"])


def test_cluster_generation_is_seeded():
    text = MINIMAL + "\n[features]\ncluster = [{ center = [1.0, 1.0], radius = 0.5, count = 50 }]\n"
    sc = config.loads(text)
    a, b = sc.build_arena(), sc.build_arena()
    assert a.features == b.features
    assert len(a.features) == 50
    assert all(0.2 <= f.response <= 1.0 for f in a.features)
    assert sc.build_arena(seed=8).features != a.features


def test_clusters_clipped_to_arena():
    text = MINIMAL + "\n[features]\ncluster = [{ center = [0.0, 0.0], radius = 0.5, count = 200 }]\n"
    arena = config.loads(text).build_arena()
    assert 0 < len(arena.features) < 200
    assert all(f.x >= 0 and f.y >= 0 for f in arena.features)


def test_explicit_points():
    text = MINIMAL + "\n[features]\npoints = [[1.0, 1.0, 0.5], [2.0, 2.0, 0.9]]\n"
    arena = config.loads(text).build_arena()
    assert [(f.x, f.y, f.response) for f in arena.features] == [(1.0, 1.0, 0.5), (2.0, 2.0, 0.9)]


def test_with_seed_round_trip():
    sc = config.loads(MINIMAL)
    other = sc.with_seed(11)
    assert other.seed == 11 and other.params == sc.params
