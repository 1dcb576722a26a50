import csv
import json

import numpy as np
import pytest

from featurefield import cli, config
from featurefield.field_map import COLORS, FEATURE_FRIENDLY, GOAL_FRIENDLY, NEUTRAL, read_ppm

DETOUR = str(config.bundled("detour"))
CLUSTER = str(config.bundled("cluster"))
CLUSTER_FEATURES = str(config.bundled("cluster").with_name("cluster_features.csv"))


def colors(path):
    return {tuple(c) for c in np.unique(read_ppm(path).reshape(-1, 3), axis=0)}


def test_simulate_success_writes_outputs(tmp_path):
    assert cli.main(["simulate", DETOUR, "--out", str(tmp_path)]) == cli.EXIT_SUCCESS
    run = tmp_path / "detour_seed0"
    rows = list(csv.DictReader((run / "trajectory.csv").open()))
    assert rows[0]["frame"] == "0" and rows[-1]["status"] == "OK"
    meta = json.loads((run / "metadata.json").read_text())
    assert meta["result"]["outcome"] == "SUCCESS"
    assert meta["scenario"]["field"]["lambda"] == 0.45


def test_simulate_straight_path_lost(tmp_path):
    code = cli.main(["simulate", DETOUR, "--out", str(tmp_path), "--set", "field.lambda=1.0"])
    assert code == cli.EXIT_LOST


def test_simulate_timeout(tmp_path):
    code = cli.main(["simulate", DETOUR, "--out", str(tmp_path), "--set", "run.max_time=1.0"])
    assert code == cli.EXIT_TIMEOUT


def test_bundled_prefix(tmp_path):
    assert cli.main(["simulate", "bundled:detour", "--out", str(tmp_path)]) == cli.EXIT_SUCCESS


def test_missing_camera_section(tmp_path, capsys):
    text = config.bundled("detour").read_text()
    start = text.index("[camera]")
    end = text.index("[field]")
    bad = tmp_path / "bad.toml"
    bad.write_text(text[:start] + text[end:])
    assert cli.main(["simulate", str(bad), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "[camera]" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(["simulate", str(tmp_path / "nope.toml")]) == cli.EXIT_CONFIG


def test_simulate_deterministic_bytes(tmp_path):
    for d in ("a", "b"):
        cli.main(["simulate", DETOUR, "--out", str(tmp_path / d), "--set", "run.seed=4"])
    a = (tmp_path / "a" / "detour_seed4" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "detour_seed4" / "trajectory.csv").read_bytes()
    assert a == b


def test_fieldmap_cluster_features(tmp_path):
    code = cli.main(["fieldmap", CLUSTER, "--features", CLUSTER_FEATURES, "--out", str(tmp_path)])
    assert code == cli.EXIT_SUCCESS
    out = tmp_path / "cluster_seed0"
    for name in ("charges", "fieldmap"):
        for ext in (".ppm", ".csv", ".json"):
            assert (out / (name + ext)).exists()
    assert {COLORS[GOAL_FRIENDLY], COLORS[FEATURE_FRIENDLY]} <= colors(out / "fieldmap.ppm")
    rows = (out / "fieldmap.csv").read_text().splitlines()
    assert len(rows) == 1 + 90 * 60


def test_fieldmap_from_pose(tmp_path):
    assert cli.main(["fieldmap", CLUSTER, "--out", str(tmp_path)]) == cli.EXIT_SUCCESS
    meta = json.loads((tmp_path / "cluster_seed0" / "fieldmap.json").read_text())
    assert meta["feature_count"] > 0


def test_fieldmap_empty_features_all_neutral(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("u,v\n")
    assert cli.main(["fieldmap", CLUSTER, "--features", str(empty), "--out", str(tmp_path)]) == 0
    assert colors(tmp_path / "cluster_seed0" / "fieldmap.ppm") == {COLORS[NEUTRAL]}


def test_fieldmap_stride_too_large(tmp_path):
    code = cli.main(["fieldmap", CLUSTER, "--out", str(tmp_path), "--set", "fieldmap.step=800"])
    assert code == cli.EXIT_CONFIG


def test_fieldmap_features_off_sensor(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("u,v\n900,10\n")
    assert cli.main(["fieldmap", CLUSTER, "--features", str(bad), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate"])
    assert exc.value.code == cli.EXIT_USAGE


def read_summary(path):
    return list(csv.DictReader(path.open()))


def test_sweep_lambda(tmp_path):
    code = cli.main(["sweep", DETOUR, "--param", "lambda", "--values", "1.0,0.45", "--reps", "5",
                     "--out", str(tmp_path), "--workers", "2"])
    assert code == 0
    rows = read_summary(tmp_path / "summary.csv")
    assert [(r["lambda"], r["runs"], float(r["success_rate"])) for r in rows] == [
        ("1.0", "5", 0.0), ("0.45", "5", 1.0)]
    assert len(list((tmp_path / "lambda=0.45").glob("*/trajectory.csv"))) == 5


def test_sweep_single_matches_simulate(tmp_path):
    cli.main(["sweep", DETOUR, "--param", "s", "--values", "150", "--reps", "1", "--seed", "2",
              "--out", str(tmp_path / "sw")])
    code = cli.main(["simulate", DETOUR, "--out", str(tmp_path / "sim"), "--set", "run.seed=2"])
    (row,) = read_summary(tmp_path / "sw" / "summary.csv")
    assert float(row["success_rate"]) == (1.0 if code == 0 else 0.0)
    a = (tmp_path / "sw" / "s=150.0" / "detour_seed2" / "trajectory.csv").read_bytes()
    b = (tmp_path / "sim" / "detour_seed2" / "trajectory.csv").read_bytes()
    assert a == b


def test_sweep_deterministic(tmp_path):
    for d in ("a", "b"):
        cli.main(["sweep", DETOUR, "--param", "theta_cs_hat_deg", "--values", "30,90", "--reps", "2",
                  "--out", str(tmp_path / d)])
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_sweep_value_out_of_bounds(tmp_path):
    code = cli.main(["sweep", DETOUR, "--param", "lambda", "--values", "2.0", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
