from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from elastores import cli
from elastores.io import ConfigError, config_from_dict, format_number, parse_config, read_csv, write_csv

ROOT = Path(__file__).resolve().parents[1]
MESHES = ROOT / "meshes"


def _doc(**over):
    doc = {
        "mesh": str(MESHES / "cube.off"),
        "medium": {"lambda": 1.0, "mu": 1.0, "rho": 1.0},
        "contrast": {"delta": 1e-4, "tau": 1.0},
        "incident": {"kind": "compressional", "direction": [0, 0, 1]},
    }
    doc.update(over)
    return doc


def _write_config(tmp_path, doc, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


# ---------------------------------------------------------------- config parsing


def test_minimal_config_epsilon():
    cfg = config_from_dict(_doc())
    assert cfg.epsilon == pytest.approx(1e-4, rel=1e-15)
    cfg = config_from_dict(_doc(contrast={"delta": 1e-4, "tau": 2.0}))
    assert cfg.epsilon == pytest.approx(2.5e-5, rel=1e-15)


def test_convexity_violation_rejected():
    with pytest.raises(ConfigError, match="convexity"):
        config_from_dict(_doc(medium={"lambda": -1.0, "mu": 1.0}))


@pytest.mark.parametrize("doc", [
    _doc(colour="red"),
    _doc(medium={"lambda": 1.0, "mu": 1.0, "nu": 0.3}),
    _doc(contrast={"delta": 1e-4}),
    {k: v for k, v in _doc().items() if k != "incident"},
    _doc(contrast={"delta": 0.0, "tau": 1.0}),
    _doc(contrast={"delta": 1e-4, "tau": -1.0}),
    _doc(incident={"kind": "shear", "direction": [0, 0, 1]}),
    _doc(incident={"kind": "shear", "direction": [0, 0, 1], "polarization": [0, 1, 1]}),
    _doc(incident={"kind": "compressional", "direction": [0, 0, 0]}),
    _doc(quadrature={"regular_order": 5}),
    _doc(scan={"omega_min": 3.0, "omega_max": 0.2}),
    _doc(scan={"count": 1}),
    _doc(sweep={"delta": [1e-2, -1e-3]}),
    _doc(medium={"lambda": "soft", "mu": 1.0}),
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_unreadable_mesh_path(tmp_path):
    with pytest.raises(ConfigError, match="mesh"):
        config_from_dict(_doc(mesh=str(tmp_path / "missing.off")))


def test_config_normalizes_and_coerces(tmp_path):
    doc = _doc(contrast={"delta": "1e-4", "tau": 1}, incident={"kind": "compressional", "direction": [0, 3, 4]},
               mesh="meshes/cube.off", output="results")
    cfg = config_from_dict(doc, ROOT)
    assert cfg.delta == 1e-4
    assert np.allclose(cfg.direction, [0, 0.6, 0.8])
    assert cfg.mesh == ROOT / "meshes/cube.off"
    assert cfg.output == ROOT / "results"


def test_parse_config_file(tmp_path):
    path = _write_config(tmp_path, _doc(sweep={"delta": [1e-2, 1e-3]}))
    cfg = parse_config(path)
    assert cfg.deltas == (1e-2, 1e-3)
    (tmp_path / "bad.yaml").write_text("mesh: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "bad.yaml")
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.yaml")


def test_bundled_configs_parse():
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        cfg = parse_config(path)
        assert cfg.mesh.is_file()


# ---------------------------------------------------------------- CSV


def test_format_number():
    assert format_number(True) == "1"
    assert format_number(np.int64(7)) == "7"
    assert format_number(1 / 3) == "0.333333333333"
    assert format_number(np.float64(-2.5e-17)) == "-2.5e-17"
    assert format_number("qep") == "qep"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(-10**6, 10**6),
                          st.floats(allow_nan=False, allow_infinity=False, width=64),
                          st.sampled_from(["asymptotic", "qep"])), min_size=1, max_size=20))
def test_csv_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_csv(path, ["mode", "value", "source"], rows)
    back = read_csv(path)
    assert back["mode"] == [r[0] for r in rows]
    assert back["source"] == [r[2] for r in rows]
    for got, (_, want, _) in zip(back["value"], rows):
        assert got == float(f"{want:.12g}")


def test_csv_row_length_checked(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", ["a", "b"], [[1]])


# ---------------------------------------------------------------- command line


def test_unknown_command_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["explode", "--config", str(_write_config(tmp_path, _doc()))])
    assert exc.value.code == 2


def test_config_error_exit_code(tmp_path, capsys):
    path = _write_config(tmp_path, _doc(unknown_key=1))
    assert cli.main(["basis", "--config", str(path)]) == 2


def test_mesh_error_exit_code(tmp_path):
    bad = tmp_path / "open.off"
    bad.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n", encoding="utf-8")
    path = _write_config(tmp_path, _doc(mesh=str(bad)))
    assert cli.main(["basis", "--config", str(path)]) == 3


def test_thread_count_validated(tmp_path):
    path = _write_config(tmp_path, _doc())
    assert cli.main(["basis", "--config", str(path), "--threads", "0"]) == 2


def test_basis_command(tmp_path, capsys):
    path = _write_config(tmp_path, _doc(output=str(tmp_path / "out")))
    assert cli.main(["basis", "--config", str(path)]) == 0
    report = dict(zip(*read_csv(tmp_path / "out" / "basis_report.csv").values()))
    assert report["gram_defect"] <= 1e-10
    assert report["n_panels"] == 12
    assert "basis.csv" in capsys.readouterr().out


def test_resonances_both_on_sphere(tmp_path):
    out = tmp_path / "res"
    rc = cli.main(["resonances", "--config", str(ROOT / "configs" / "icosphere320.yaml"),
                   "--method", "both", "--out", str(out)])
    assert rc == 0
    res = read_csv(out / "resonances.csv")
    assert res["source"].count("asymptotic") == 6
    assert res["source"].count("qep") == 6  # each row holds a +/- pair: 12 roots
    assert all(v <= 1e-12 for v in res["im_omega_plus"])
    match = read_csv(out / "match.csv")
    assert len(match["mode"]) == 12
    assert max(match["relative_error"]) < 1e-2


def test_verify_on_cube(tmp_path, capsys):
    out = tmp_path / "v"
    rc = cli.main(["verify", "--config", str(ROOT / "configs" / "cube.yaml"), "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 0, text
    rows = read_csv(out / "verify.csv")
    checks = dict(zip(rows["check"], rows["value"]))
    assert checks["gram_defect"] <= 1e-10
    assert all(p == 1 for p in rows["passed"])
    assert "PASS  gram_defect" in text


def test_outputs_are_deterministic(tmp_path):
    cfg = str(ROOT / "configs" / "cube.yaml")
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        for cmd in ("basis", "operators", "resonances", "scan", "field"):
            assert cli.main([cmd, "--config", cfg, "--out", str(out)]) == 0
    files = sorted(p.name for p in outs[0].iterdir())
    assert {"moments.csv", "operators.csv", "resonances.csv", "enhancement.csv", "farfield.csv"} <= set(files)
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
