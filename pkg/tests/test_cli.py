import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from bhrd import __version__, cli


def run(argv):
    buf = io.StringIO()
    code = cli.run(argv, stdout=buf)
    return code, buf.getvalue()


def report(argv):
    code, text = run(argv)
    out = json.loads(text)
    jsonschema.validate(out, cli.load_schema())
    return code, out


@pytest.fixture(autouse=True)
def no_output_dir(monkeypatch):
    monkeypatch.delenv(cli.OUTPUT_DIR_ENV, raising=False)


def test_reduce_roundtrip_example():
    code, out = report(["reduce", "--direction", "roundtrip", "--instance", "trivial", "--seed", "7"])
    assert code == 0 and out["ok"]
    assert out["results"]["deltaGamma"] <= 1e-9 and out["results"]["deltaEpsilon"] <= 1e-9
    assert out["config"]["seed"] == 7 and out["config"]["lambda"] == 64


def test_hybrid_two_example():
    code, out = report(["efi2bhrd", "--pair", "perfect", "--hybrid", "2"])
    assert code == 0
    assert abs(out["results"]["epsilon"]) <= 1e-12
    assert [row["h"] for row in out["results"]["hybrids"]] == [0, 1, 2]
    assert out["results"]["hybrids"][0]["epsilon"] == pytest.approx(1.0)


def test_estlemma_worked_example():
    code, out = report(["estlemma", "--alphas", ",".join(["0.9"] * 10), "--delta", "0.5"])
    assert code == 0
    assert out["results"]["threshold"] == pytest.approx(0.78927, abs=1e-5)
    assert out["results"]["fraction"] == 1.0


def test_report_embeds_config_and_version():
    _, out = report(["bell-check"])
    assert out["schema"] == "bhrd-report/1"
    assert out["version"] == __version__
    assert out["config"]["format"] == "json" and "seed" in out["config"]


def test_amplify_report_fields():
    code, out = report(["amplify", "--n", "16", "--trials", "10000", "--seed", "7"])
    assert code == 0
    r = out["results"]
    for key in ("alphas", "iStar", "gamma", "epsilon", "seed", "trials"):
        assert key in r
    assert len(r["alphas"]) == 16 and r["seed"] == 7
    assert 0.25 <= r["gamma"] <= 0.4 and r["epsilon"] >= 0.9


def test_plain_report_fields():
    _, out = report(["bhrd2efi", "--mode", "plain"])
    for key in ("delta", "delta0", "delta1", "deltaBot", "successFloor", "successMeasured"):
        assert key in out["results"]


@pytest.mark.parametrize(
    "argv",
    [
        ["score", "--instance", "unknown"],
        ["efi2bhrd", "--pair", "unknown"],
        ["gl", "--predictor", "unknown"],
        ["amplify", "--n", "16", "--trials", "5", "--seed", "1"],
        ["amplify", "--n", "16"],
        ["score", "--mode", "mc"],
        ["amplify", "--source", "gl", "--n", "3", "--seed", "0"],
    ],
)
def test_errors_exit_nonzero_with_error_json(argv):
    code, out = report(argv)
    assert code == 2
    assert out["ok"] is False and out["error"]["message"]


def test_failed_bound_exits_one(monkeypatch):
    def broken(args, rng):
        out = cli.Outcome()
        out.at_most("impossible", 1.0, 0.0)
        return out

    monkeypatch.setitem(cli.COMMANDS, "bell-check", broken)
    code, out = report(["bell-check"])
    assert code == 1 and out["ok"] is False
    assert out["checks"] == [{"name": "impossible", "value": 1.0, "bound": 0.0, "passed": False}]


def test_csv_rows(tmp_path):
    path = tmp_path / "r.csv"
    code, _ = run(["reduce", "--count", "4", "--format", "csv", "--out", str(path)])
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 4 and "gammaIn" in rows[0]


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    code, text = run(["bell-check"])
    assert code == 0 and text == ""
    assert json.loads((tmp_path / "bell-check.json").read_text())["ok"]


def test_repeat_runs_identical_modulo_timestamp():
    argv = ["teleport-check", "--trials", "10", "--seed", "12"]
    a, b = (json.loads(run(argv)[1]) for _ in range(2))
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "bhrd.cli", "bell-check"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["command"] == "bell-check"
