import json
from pathlib import Path

import pytest
import yaml

from energyopt.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_LIMIT, EXIT_OK, main, write_bundle

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def _config(tmp_path, name, edit=None):
    """Copy a bundled config next to absolute data paths, optionally edited."""
    cfg = yaml.safe_load((CONFIGS / f"{name}.yaml").read_text())
    sec = next(k for k in cfg if k not in ("seed", "output_dir"))
    for block in (cfg[sec], cfg.get("building", {})):
        for key in ("inputs", "history", "meters", "labels", "weather"):
            if key in block:
                block[key] = str((CONFIGS / block[key]).resolve())
    if edit:
        edit(cfg)
    path = tmp_path / f"{name}.yaml"
    path.write_text(yaml.safe_dump(cfg, sort_keys=False))
    return path


def _run(command, cfg, out, *extra):
    return main([command, "--config", str(cfg), "--out", str(out), *extra])


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("command,name", [("forecast", "forecast"), ("fit-building", "fit_building"),
                                          ("pareto", "pareto")])
def test_same_seed_is_byte_identical(tmp_path, command, name):
    cfg = _config(tmp_path, name)
    assert _run(command, cfg, tmp_path / "a", "--seed", "5") == EXIT_OK
    assert _run(command, cfg, tmp_path / "b", "--seed", "5") == EXIT_OK
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    assert a == b and "manifest.json" in a


def test_manifest_lists_inputs_and_outputs(tmp_path):
    cfg = _config(tmp_path, "fit_building")
    assert _run("fit-building", cfg, tmp_path / "o") == EXIT_OK
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["command"] == "fit-building"
    assert len(manifest["config_sha256"]) == 64
    assert [i["path"] for i in manifest["inputs"]] == [str((ROOT / "data/building_history.csv").resolve())]
    outputs = {o["path"] for o in manifest["outputs"]}
    assert outputs == set(_tree(tmp_path / "o")) - {"manifest.json"}


def test_pareto_outputs(tmp_path):
    assert _run("pareto", _config(tmp_path, "pareto"), tmp_path / "o") == EXIT_OK
    points = json.loads((tmp_path / "o" / "pareto_points.json").read_text())
    front = json.loads((tmp_path / "o" / "pareto_front.json").read_text())
    assert len(points) == 18 and 0 < len(front) <= len(points)
    keys = ("cost", "carbon", "comfort")
    for f in front:
        assert all(k in f for k in keys)
        # nothing in the grid dominates a front member
        for p in points:
            better_eq = p["cost"] <= f["cost"] and p["carbon"] <= f["carbon"] and p["comfort"] >= f["comfort"]
            strictly = p["cost"] < f["cost"] or p["carbon"] < f["carbon"] or p["comfort"] > f["comfort"]
            assert not (better_eq and strictly)
    assert (tmp_path / "o" / "pareto_points.csv").read_text().startswith("w_cost,")


def test_missing_input_is_config_error(tmp_path, capsys):
    cfg = _config(tmp_path, "fit_building",
                  lambda c: c["fit_building"].update(history=str(tmp_path / "nope.csv")))
    out = tmp_path / "o"
    assert _run("fit-building", cfg, out) == EXIT_CONFIG
    err = capsys.readouterr().err.splitlines()
    assert err[0] == "E_CONFIG" and "not found" in err[1]
    assert not out.exists()


def test_missing_config_and_bad_yaml(tmp_path, capsys):
    assert _run("chp", tmp_path / "absent.yaml", tmp_path / "o") == EXIT_CONFIG
    bad = tmp_path / "bad.yaml"
    bad.write_text("chp: [unclosed\n")
    assert _run("chp", bad, tmp_path / "o") == EXIT_CONFIG
    assert capsys.readouterr().err.count("E_CONFIG") == 2
    assert not (tmp_path / "o").exists()


def test_unknown_key_is_config_error(tmp_path):
    cfg = _config(tmp_path, "chp", lambda c: c["chp"]["costs"].update(bogus=1))
    assert _run("chp", cfg, tmp_path / "o") == EXIT_CONFIG


def test_infeasible_exit_code(tmp_path, capsys):
    cfg = _config(tmp_path, "ems", lambda c: c["ems"].update(peak_threshold=0.0, tariffs=["flat"]))
    out = tmp_path / "o"
    assert _run("ems", cfg, out) == EXIT_INFEASIBLE
    assert capsys.readouterr().err.splitlines()[0] == "E_INFEASIBLE"
    assert not out.exists()


def test_solver_limit_exit_code(tmp_path, capsys):
    cfg = _config(tmp_path, "chp", lambda c: c["chp"].update(solver={"max_nodes": 1, "rel_gap": 1e-12}))
    out = tmp_path / "o"
    assert _run("chp", cfg, out) == EXIT_LIMIT
    assert capsys.readouterr().err.splitlines()[0] == "E_SOLVER_LIMIT"
    assert not out.exists()


def test_generate_matches_bundled_files(tmp_path):
    assert main(["generate", "--out", str(tmp_path), "--seed", "0"]) == EXIT_OK
    for rel, data in write_bundle(0).items():
        assert (tmp_path / rel).read_bytes() == data == (ROOT / rel).read_bytes()


def test_bundled_configs_parse_with_relative_paths():
    for name in ("forecast", "fit_building", "mpc", "pareto", "chp", "ems"):
        cfg = yaml.safe_load((CONFIGS / f"{name}.yaml").read_text())
        assert cfg["seed"] == 0 and cfg["output_dir"].startswith("../out/")
