import csv
import io
import json
import math

import numpy as np
import pytest

from nonlocality import states
from nonlocality.cli import format_state, parse_state, run


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def invoke_json(capsys, *argv):
    code, out, err = invoke(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_ppt_werner(capsys):
    report = invoke_json(capsys, "ppt", "--family", "werner", "--x", "0.5")
    assert report["command"] == "ppt"
    assert report["results"]["min_eigenvalue"] == pytest.approx(-0.125, abs=1e-12)
    assert report["results"]["is_ppt"] is False
    assert set(report) == {"command", "inputs", "results", "tolerances", "seed", "version"}


def test_ppt_gisin(capsys):
    report = invoke_json(capsys, "ppt", "--family", "gisin", "--x", "0.6")
    assert report["results"]["min_eigenvalue"] == pytest.approx(-0.1, abs=1e-12)


def test_chsh_polarized(capsys):
    report = invoke_json(capsys, "chsh", "--family", "singlet-polarized", "--x", "0.8")
    assert report["results"]["max"] == pytest.approx(2 * math.sqrt(1.28))
    assert report["results"]["max"] == pytest.approx(2.2627, abs=1e-4)
    assert report["results"]["violated"] is True


def test_chsh_oracle_flag(capsys):
    report = invoke_json(capsys, "chsh", "--family", "werner", "--x", "0.9", "--oracle")
    assert report["results"]["oracle_max"] == pytest.approx(report["results"]["max"], abs=1e-6)


def test_thresholds(capsys):
    r = invoke_json(capsys, "thresholds")["results"]
    assert r["mixture_ppt"]["value"] == pytest.approx(0.5)
    assert r["werner_bell"]["value"] == pytest.approx(1 / math.sqrt(2), abs=1e-11)
    assert r["polarized_bell"]["quoted"] == 0.8


def test_collective_xor(capsys):
    report = invoke_json(capsys, "collective", "--family", "werner", "--x", "0.5", "--pairs", "5")
    assert report["results"]["c_max"] == pytest.approx(2.000873, abs=1e-6)


def test_optimize_command(capsys):
    report = invoke_json(capsys, "optimize", "--x", "0.7", "--pairs", "2", "--restarts", "3")
    assert report["results"]["best_value"] == pytest.approx(report["results"]["xor_value"], abs=1e-6)
    assert len(report["results"]["per_restart"]) == 4


def test_scan_csv(capsys):
    code, out, _ = invoke(
        capsys, "scan", "--pairs", "3", "--grid", "0.1", "--x-min", "0.5", "--x-max", "0.8", "--restarts", "4"
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["x"]) for r in rows] == [0.5, 0.6, 0.7, 0.8]
    values = [float(r["c_max"]) for r in rows]
    assert all(b >= a - 2e-3 for a, b in zip(values, values[1:]))
    assert all(float(r["c_max"]) >= float(r["xor_value"]) - 1e-12 for r in rows)


def test_emit_state_round_trip(capsys, tmp_path):
    path = tmp_path / "rho.txt"
    code, _, _ = invoke(capsys, "emit-state", "--family", "gisin", "--x", "0.3",
                        "--a-re", "0.6", "--b-im", "0.8", "--b-re", "0", "--out", str(path))
    assert code == 0
    rho = parse_state(path.read_text())
    want = states.gisin_family(0.6, 0.8j, 0.3)
    assert np.array_equal(rho.mat, want.mat)
    assert format_state(rho) == path.read_text()
    report = invoke_json(capsys, "ppt", "--family", "file", "--path", str(path))
    assert report["results"]["min_eigenvalue"] == pytest.approx(invoke_json(
        capsys, "ppt", "--family", "gisin", "--x", "0.3", "--a-re", "0.6", "--b-re", "0", "--b-im", "0.8"
    )["results"]["min_eigenvalue"], abs=0)


def test_random_state_round_trip(rng):
    rho = states.random_density(2, 3, rng)
    assert np.array_equal(parse_state(format_state(rho)).mat, rho.mat)


@pytest.mark.parametrize(
    "argv",
    [
        ["ppt", "--family", "werner"],
        ["ppt", "--family", "werner", "--x", "1.5"],
        ["ppt", "--family", "nope"],
        ["chsh", "--family", "gisin", "--x", "0.5", "--a-re", "1", "--b-re", "1"],
        ["collective", "--x", "0.5", "--pairs", "9"],
        ["optimize", "--x", "0.5", "--pairs", "2", "--restarts", "0"],
        ["scan", "--pairs", "2", "--grid", "-0.1"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = invoke(capsys, *argv)
    assert code == 1
    assert err


def test_invalid_state_file_exits_2(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2\n" + "\n".join(" ".join("0.5,0" for _ in range(4)) for _ in range(4)))
    code, _, err = invoke(capsys, "ppt", "--family", "file", "--path", str(path))
    assert code == 2
    assert "numerical failure" in err


def test_malformed_state_file_exits_2(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2\n1,0 0,0\n")
    assert invoke(capsys, "ppt", "--family", "file", "--path", str(path))[0] == 2


def test_non_hermitian_state_file_exits_2(capsys, tmp_path):
    m = np.eye(4, dtype=complex) / 4
    m[0, 1] = 0.1
    text = format_state(states.Bipartite(m, 2, 2))
    path = tmp_path / "skew.txt"
    path.write_text(text)
    assert invoke(capsys, "chsh", "--family", "file", "--path", str(path))[0] == 2

