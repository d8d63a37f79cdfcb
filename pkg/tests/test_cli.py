import json
import math
import subprocess
import sys

import pytest

from qalg import cli


def run(*argv):
    return cli.main(list(argv))


def test_parse_values():
    assert cli.parse_value("3") == 3.0
    assert cli.parse_value("1/4") == 0.25
    assert cli.parse_value("-2.5e-1") == -0.25
    assert cli.parse_value("1+2i") == complex(1, 2)
    assert cli.parse_value("-i") == complex(0, -1)
    assert cli.parse_value("3+0i") == 3.0
    with pytest.raises(cli.UsageError):
        cli.parse_value("abc")


def test_parse_dims():
    assert cli.parse_dims("4") == [4]
    assert cli.parse_dims("2:6") == [2, 3, 4, 5, 6]
    for bad in ("0", "x", "5:3"):
        with pytest.raises(cli.UsageError):
            cli.parse_dims(bad)


def test_dumps_roundtrip():
    obj = {"a": 1.0, "b": [0.1, 1e-300, 2], "c": {"re": 0.5, "im": -1.0}, "d": None, "e": "x"}
    text = cli.dumps(obj)
    back = json.loads(text)
    assert back == obj
    assert isinstance(back["a"], float)
    assert cli.dumps(back) == text


def test_jsonable_handles_complex_and_nan():
    assert cli.to_jsonable(1 + 2j) == {"re": 1.0, "im": 2.0}
    assert cli.to_jsonable(math.nan) is None


def test_list(capsys):
    assert run("list") == 0
    out = capsys.readouterr().out
    assert "E1" in out and "S3diff" in out


def test_list_json(tmp_path):
    path = tmp_path / "cat.json"
    assert run("list", "--json", str(path)) == 0
    cat = json.loads(path.read_text())
    assert len(cat) == 14


def test_verify_e1_example(tmp_path):
    path = tmp_path / "out.json"
    code = run("verify", "--system", "E1", "--param", "omega=1", "--param", "a=0.5", "--param", "b=0.5",
               "--dim", "4", "--json", str(path))
    assert code == 0
    rep = json.loads(path.read_text())
    names = {r["name"] for r in rep["relations"]}
    assert {"[R,L1]", "[R,L2]", "R^2"} <= names
    assert all("residual" in r for r in rep["relations"])


def test_verify_failure_exit_code(tmp_path):
    # an off-shell energy with an impossible tolerance forces failures
    code = run("verify", "--system", "E1", "--tol", "relation=1e-40", "--tol", "closure=1e-40",
               "--json", str(tmp_path / "r.json"))
    assert code == 1


def test_usage_errors(capsys):
    assert run("verify") == 2
    assert run("verify", "--system", "E1", "--param", "omega") == 2
    assert run("verify", "--system", "E1", "--param", "omega=0") == 2
    assert run("verify", "--system", "E15", "--dim", "0") == 2
    assert run("bogus") == 2
    assert run("sweep", "--all", "--dims", "0") == 2
    err = capsys.readouterr().err
    assert "qalg: error" in err


def test_spectrum_command(capsys):
    assert run("spectrum", "--system", "E1", "--op", "L2", "--dim", "3") == 0


def test_sweep_small_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("sweep", "--system", "E20", "--dims", "2:3", "--draws", "3", "--json", str(a)) == 0
    assert run("sweep", "--system", "E20", "--dims", "2:3", "--draws", "3", "--json", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert data["ok"] and len(data["runs"]) == 6


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qalg.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0
