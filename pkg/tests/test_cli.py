import csv
import json
import subprocess
import sys

import pytest

from ptscat import cli

BOX_Q = {"breakpoints": [-1, 1], "coefficients": [[1]]}


def run(tmp_path, command, cfg, *extra):
    path = tmp_path / f"{command}.json"
    path.write_text(json.dumps(cfg))
    return cli.main([command, "--config", str(path), *extra])


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_lambda_zero_is_config_error(tmp_path, capsys):
    assert run(tmp_path, "resonances", {"lambda": 0, "rect": [-2, 2, -5, 0]}) == 2
    assert "lambda" in capsys.readouterr().err


def test_bad_json_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"lambda": 1.0,\n  "rect": [1, 2,, 3]}')
    assert cli.main(["resonances", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


@pytest.mark.parametrize("cfg", [
    {"lambda": 1.0},                                             # rect missing
    {"lambda": 1.0, "rect": [2, -2, -5, 0]},                     # empty rect
    {"lambda": 1.0, "rect": [-2, 2, -5, 0], "search": {"bogus": 1}},
    {"lambda": 1.0, "rect": [-2, 2, -5, 0], "q": {"breakpoints": [1, 0], "coefficients": [[1]]}},
])
def test_invalid_configs(tmp_path, cfg):
    assert run(tmp_path, "resonances", cfg) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["verify", "--config", str(tmp_path / "nope.json")]) == 2


def test_resonances_zero_q(tmp_path):
    out = tmp_path / "out"
    assert run(tmp_path, "resonances", {"lambda": 0.25, "rect": [-2, 2, -5, 0]}, "--out", str(out)) == 0
    r = rows(out / "zeros.csv")
    assert tuple(r[0]) == cli.ZEROS_COLUMNS
    assert len(r) == 6 and all(row[2] == "2" for row in r[1:])
    assert json.loads((out / "zeros.json").read_text())["config"]["lambda"] == 0.25


def test_verify_zero_q(tmp_path):
    out = tmp_path / "v"
    assert run(tmp_path, "verify", {"lambda": 1.0}, "--out", str(out)) == 0
    r = rows(out / "verify.csv")
    assert tuple(r[0]) == cli.VERIFY_COLUMNS
    assert all(row[1] == "1" for row in r[1:])


def test_scattering_deterministic_and_cached(tmp_path):
    cfg = {"lambda": 1.0, "q": BOX_Q, "grid_n": 128,
           "scattering": {"real": [-3, 3, 5], "mesh": [-1, 1, -1, 1, 2, 2]}}
    cache = tmp_path / "cache"
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(tmp_path, "scattering", cfg, "--out", str(a), "--cache", str(cache)) == 0
    kernels = sorted(cache.glob("kernel-*.npz"))
    assert len(kernels) == 2
    stamps = [k.stat().st_mtime_ns for k in kernels]
    assert run(tmp_path, "scattering", cfg, "--out", str(b), "--cache", str(cache), "--threads", "2") == 0
    assert [k.stat().st_mtime_ns for k in kernels] == stamps
    assert (a / "scattering.csv").read_bytes() == (b / "scattering.csv").read_bytes()
    r = rows(a / "scattering.csv")
    assert tuple(r[0]) == cli.SCATTERING_COLUMNS and len(r) == 1 + 5 + 4
    assert float(r[1][-1]) < 1e-9          # real axis: unitarity residual
    assert r[-1][-1] == "nan"              # off axis


def test_failure_leaves_no_partial_outputs(tmp_path):
    out = tmp_path / "f"
    cfg = {"lambda": 1.0, "rect": [-2, 2, -5, 0], "search": {"max_evals": 10}}
    assert run(tmp_path, "resonances", cfg, "--out", str(out)) == 1
    assert not out.exists() or list(out.iterdir()) == []


def test_outputs_staging_discarded_on_error(tmp_path):
    with pytest.raises(RuntimeError):
        with cli.Outputs(tmp_path) as o:
            o.csv("x.csv", ("a",), [(1.0,)])
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_help_lists_columns():
    res = subprocess.run([sys.executable, "-m", "ptscat", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for col in cli.SCATTERING_COLUMNS + cli.ZEROS_COLUMNS + cli.OVERLAY_COLUMNS:
        assert col in res.stdout
