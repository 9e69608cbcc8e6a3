import json
import subprocess
import sys

import pytest

from fatoubasin.cli import read_config, run, UsageError


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_command_is_usage_error(capsys):
    code, out, err = call(capsys)
    assert code == 2 and out == "" and "usage:" in err


def test_unknown_flag_is_usage_error(capsys):
    code, out, err = call(capsys, "jet", "--bogus")
    assert code == 2 and out == "" and "usage:" in err


def test_jet_prints_exact_coefficients(capsys):
    code, out, _ = call(capsys, "jet", "--order", "4")
    assert code == 0
    d = json.loads(out)
    assert d["second"]["z^4 w^0"] == "-1/3"
    assert d["second"]["z^3 w^1"] == "8/3"
    assert d["second"]["z^1 w^2"] == "-1"
    assert d["first"]["z^2 w^0"] == "1"
    assert d["config"]["order"] == 4


def test_output_is_deterministic_unless_stamped(capsys):
    a = call(capsys, "jet")[1]
    b = call(capsys, "jet")[1]
    assert a == b and "stamp" not in json.loads(a)
    c = call(capsys, "jet", "--stamp")[1]
    assert "stamp" in json.loads(c)


def test_certify_exit_codes(capsys):
    code, out, _ = call(capsys, "certify")
    assert code == 0 and json.loads(out)["pass"] is True
    code, out, _ = call(capsys, "certify", "--eps", "0.05", "--R", "10")
    assert code == 1 and json.loads(out)["pass"] is False


def test_bad_params_rejected_for_other_commands(capsys):
    code, out, err = call(capsys, "jet", "--R", "10")
    assert code == 2 and "rejected" in err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\norder = 3\nbudget=50\n")
    d = json.loads(call(capsys, "jet", "--config", str(cfg))[1])
    assert d["order"] == 3 and d["config"]["budget"] == 50
    d = json.loads(call(capsys, "jet", "--config", str(cfg), "--order", "5")[1])
    assert d["order"] == 5 and d["config"]["budget"] == 50


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    assert call(capsys, "jet", "--config", str(cfg))[0] == 2
    with pytest.raises(UsageError):
        read_config(str(tmp_path / "missing.cfg"))
    cfg.write_text("budget=many\n")
    with pytest.raises(UsageError):
        read_config(str(cfg))


def test_orbit_csv(capsys):
    code, out, _ = call(capsys, "orbit", "--z", "-1e-3", "--w", "-1e-2", "--steps", "5")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("n,re_z") and len(lines) == 7
    assert call(capsys, "orbit", "--z", "zz", "--w", "0")[0] == 2


def test_curve_json(capsys):
    code, out, _ = call(capsys, "curve")
    d = json.loads(out)
    assert code == 0 and d["exact"][0] == [3, "-1/9"]


def test_fatou_csv(tmp_path, capsys):
    src = tmp_path / "pts.csv"
    src.write_text("re_z,im_z,re_w,im_w\n-0.002,0.0,-0.006,0.0\n0.0,0.0,0.3,0.0\n")
    code, out, _ = call(capsys, "fatou", str(src), "--upsilon")
    lines = out.splitlines()
    assert code == 0
    assert lines[0].endswith("err_est,re_upsilon,im_upsilon,err_upsilon")
    assert lines[1].split(",")[4] != "" and lines[2].split(",")[4] == ""
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert call(capsys, "fatou", str(bad))[0] == 2


def test_basin_writes_pgm_and_sidecar(tmp_path, capsys):
    out = tmp_path / "b.pgm"
    code, text, _ = call(capsys, "basin", "--grid", "16x12", "--budget", "200", "--out", str(out))
    assert code == 0
    assert out.read_bytes().startswith(b"P5\n16 12\n255\n")
    side = json.loads((tmp_path / "b.pgm.json").read_text())
    assert side["grid"] == [16, 12] and side == json.loads(text)
    first = out.read_bytes()
    call(capsys, "basin", "--grid", "16x12", "--budget", "200", "--out", str(out))
    assert out.read_bytes() == first
    assert call(capsys, "basin", "--grid", "1x1")[0] == 2


def test_verify_subset(capsys):
    code, out, err = call(capsys, "verify", "--only", "germ", "directions")
    assert code == 0 and json.loads(out)["pass"] is True and "pass  germ" in err
    assert call(capsys, "verify", "--only", "nope")[0] == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "fatoubasin", "jet", "--order", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["order"] == 2
