import csv
import json

import pytest

from sasakipmc import cli


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def load(tmp_path, name):
    return json.loads((tmp_path / f"{name}.json").read_text())


def test_verify_model_passes(tmp_path):
    assert run(tmp_path, "verify-model", "--model", "heisenberg", "--n", "3", "--points", "100", "--seed", "42") == 0
    doc = load(tmp_path, "verify-model")
    assert doc["pass"] is True
    assert "schema_version" in doc
    assert all({"name", "max_residual", "mean_residual", "tolerance", "pass"} <= set(c) for c in doc["checks"])
    assert (tmp_path / "verify-model.timing.json").exists()


def test_bad_deformation_is_usage_error(tmp_path):
    assert run(tmp_path, "verify-model", "--model", "deformed_sphere", "--a", "-1") == 2


def test_perturbed_model_fails_but_writes_report(tmp_path):
    assert run(tmp_path, "verify-model", "--model", "heisenberg", "--perturb", "1e-3") == 1
    assert load(tmp_path, "verify-model")["pass"] is False


def test_infeasible_product_parameters(tmp_path):
    assert run(tmp_path, "theorem2", "--c", "-7", "--h", "0.1") == 2


def test_product_surface_coarse_grid(tmp_path):
    assert run(tmp_path, "theorem2", "--c", "-3", "--h", "1", "--grid", "16", "--holomorphicity-grids", "") == 0
    for name in ("gamma1", "gamma2", "surface", "qgrid"):
        assert (tmp_path / f"theorem2_{name}.csv").exists()
    with open(tmp_path / "theorem2_qgrid.csv") as fh:
        assert next(csv.reader(fh)) == ["u", "v", "re_q1", "im_q1", "abs_dbar_q1", "re_q2", "im_q2", "abs_dbar_q2"]


def test_helix(tmp_path):
    assert run(tmp_path, "helix", "--model", "heisenberg", "--curvatures", "2,1,0.5", "--length", "5") == 0
    with open(tmp_path / "helix.csv") as fh:
        header = next(csv.reader(fh))
    assert header[0] == "s" and header[-4:] == ["kappa1", "kappa2", "kappa3", "eta_tangent"]


def test_polynomial_scan(tmp_path):
    assert run(tmp_path, "theorem5-scan", "--c-min", "-50", "--c-max", "0.999", "--t-steps", "200") == 0
    assert load(tmp_path, "theorem5-scan")["pass"] is True


def test_hopf_cylinder(tmp_path):
    assert run(tmp_path, "hopf-cylinder", "--model", "standard_sphere", "--n", "1", "--kappa", "1", "--tau", "1") == 0
    assert (tmp_path / "hopf_cylinder_surface.csv").exists()


def test_surface_parse_error(tmp_path, capsys):
    assert run(tmp_path, "surface", "--x", "u,v,u*") == 2
    assert "parse error" in capsys.readouterr().err


def test_surface_wrong_component_count(tmp_path):
    assert run(tmp_path, "surface", "--x", "u,v") == 2


def test_surface_legendre_plane(tmp_path):
    assert run(tmp_path, "surface", "--x", "u,v,0", "--grid", "24") == 0


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense"])
    assert exc.value.code == 2


def test_config_file_and_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "heisenberg", "n": 2, "points": 10}))
    assert run(tmp_path, "verify-model", "--config", str(cfg)) == 0
    assert load(tmp_path, "verify-model")["config"]["n"] == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(tmp_path, "verify-model", "--config", str(cfg)) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["verify-model", "--points", "10"]) == 0
    assert (tmp_path / "env" / "verify-model.json").exists()


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["verify-model", "--model", "deformed_sphere", "--a", "2", "--points", "20", "--seed", "7", "--out", str(d)]) == 0
    assert (a / "verify-model.json").read_bytes() == (b / "verify-model.json").read_bytes()
