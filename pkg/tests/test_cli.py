import json
import subprocess
import sys

import numpy as np
import pytest

from ppchannel import cli


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(tmp_path, command, cfg, *extra):
    out = tmp_path / f"{command}.csv"
    code = cli.main([command, "--config", _write(tmp_path, cfg), "--out", str(out), *extra])
    return code, out


def _rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_exponent_sweep_60_rows(tmp_path):
    cfg = {"noise": {"kind": "wgn", "sigma": 1.0},
           "sweep": {"alpha_list": np.linspace(1.05, 4, 60).tolist()}}
    code, out = _run(tmp_path, "exponent", cfg)
    assert code == 0
    header, rows = _rows(out)
    assert header == cli.COLUMNS["exponent"] and len(rows) == 60
    side = json.loads((tmp_path / "exponent.csv.json").read_text())
    assert side["schema_version"] == cli.SCHEMA_VERSION and len(side["rows"]) == 60
    assert side["config"] == cfg


def test_pe_exact_converges_to_exponent(tmp_path):
    cfg = {"noise": {"kind": "wgn", "sigma": 1.0}, "codebook": {"codebook": "poisson"},
           "sweep": {"n_list": list(range(50, 401, 50)), "alpha": 2.0}}
    code, out = _run(tmp_path, "pe-exact", cfg)
    assert code == 0
    _, rows = _rows(out)
    vals = np.array([float(r[3]) for r in rows])
    assert len(vals) == 8
    # finite-n values approach the limit 0.5 monotonically from above
    assert np.all(np.diff(np.abs(vals - 0.5)) < 0)
    assert abs(vals[-1] - 0.5) < 0.02


@pytest.mark.parametrize("codebook, decoder, method", [
    ("matern1", "mle", "matern-bound-quadrature"),
    ("poisson", "typicality", "typicality-bound"),
    ("grid", "mle", "grid-closed-form"),
])
def test_pe_exact_methods(tmp_path, codebook, decoder, method):
    cfg = {"noise": {"kind": "wgn"}, "codebook": {"codebook": codebook, "epsilon": 0.01},
           "decoder": {"decoder": decoder}, "sweep": {"n": 20, "alpha_list": [1.5, 3.0]}}
    code, out = _run(tmp_path, "pe-exact", cfg)
    assert code == 0
    _, rows = _rows(out)
    assert [r[4] for r in rows] == [method, method]
    assert all(float(r[2]) < 0 for r in rows)


def test_pe_mc_reproducible_across_threads(tmp_path):
    cfg = {"noise": {"kind": "wgn"}, "sweep": {"n": 3, "alpha_list": [1.3]},
           "mc": {"trials": 3000, "seed": 5, "mode": "explicit", "batch_size": 200}}
    code, out = _run(tmp_path, "pe-mc", cfg, "--threads", "1")
    first = out.read_bytes()
    code2, out = _run(tmp_path, "pe-mc", cfg, "--threads", "4")
    assert code == code2 == 0
    assert out.read_bytes() == first


def test_pe_mc_seed_flag_overrides(tmp_path):
    cfg = {"noise": {"kind": "wgn"}, "sweep": {"n": 3, "alpha_list": [1.3]},
           "mc": {"trials": 500, "seed": 5, "mode": "reduced"}}
    _, out = _run(tmp_path, "pe-mc", cfg)
    a = out.read_bytes()
    _, out = _run(tmp_path, "pe-mc", cfg, "--seed", "6")
    assert out.read_bytes() != a


def test_flagged_estimate_exit_code(tmp_path):
    cfg = {"noise": {"kind": "wgn"}, "codebook": {"window_scale": 0.2},
           "sweep": {"n": 2, "alpha_list": [1.1]}, "mc": {"trials": 2000, "mode": "explicit"}}
    code, out = _run(tmp_path, "pe-mc", cfg)
    assert code == cli.EXIT_FLAGGED
    assert not out.exists()


def test_capacity_and_shannon_map(tmp_path):
    code, out = _run(tmp_path, "capacity", {"noise": {"kind": "wgn"}, "sweep": {"P_list": [3.0]}})
    assert code == 0
    _, rows = _rows(out)
    assert float(rows[0][2]) == pytest.approx(0.5 * np.log(3))
    assert float(rows[0][3]) == pytest.approx(0.5 * np.log(4))
    cfg = {"noise": {"kind": "wgn"}, "sweep": {"alpha_list": [1.0, 2.0], "P_or_A": 10.0}}
    code, out = _run(tmp_path, "shannon-map", cfg)
    assert code == 0
    _, rows = _rows(out)
    assert float(rows[0][0]) == pytest.approx(0.5 * np.log(101))


@pytest.mark.parametrize("cfg, pointer", [
    ({"noise": {"kind": "wgn", "sigma": -1}, "sweep": {"alpha_list": [2]}}, "/noise/sigma"),
    ({"noise": {"kind": "wgn"}, "sweep": {"alpha_list": [2], "P_list": [1]}}, "/sweep"),
    ({"noise": {"kind": "wgn"}, "sweep": {"alpha_list": [2, 0.5]}}, "/sweep/alpha_list/1"),
    ({"noise": {"kind": "wgn"}, "sweep": {"alpha_list": [2]}, "extra": 1}, "/"),
    ({"sweep": {"alpha_list": [2]}}, "/noise"),
])
def test_bad_configs(tmp_path, capsys, cfg, pointer):
    code, out = _run(tmp_path, "exponent", cfg)
    assert code == cli.EXIT_CONFIG
    assert not out.exists()
    assert f"config error at {pointer}" in capsys.readouterr().err


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    out = tmp_path / "x.csv"
    assert cli.main(["exponent", "--config", str(p), "--out", str(out)]) == cli.EXIT_CONFIG
    assert not out.exists()


def test_numeric_error_names_row(tmp_path, capsys):
    cfg = {"noise": {"kind": "symexp"}, "sweep": {"n": 10, "alpha_list": [2.0]}}
    code, out = _run(tmp_path, "pe-exact", cfg)
    assert code == cli.EXIT_NUMERIC
    assert "row 0" in capsys.readouterr().err
    assert not out.exists()


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, {"noise": {"kind": "wgn"}, "sweep": {"P_list": [1.0, 2.0]}})
    res = subprocess.run([sys.executable, "-m", "ppchannel", "capacity", "--config", cfg],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0] == ",".join(cli.COLUMNS["capacity"])
    assert len(res.stdout.splitlines()) == 3
