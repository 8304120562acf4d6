import json
import subprocess
import sys

import pytest

from qensembles import cli, ensembles as E
from qensembles.states import InvariantError


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def test_moments_json(capsys):
    code, out = run(capsys, "moments", "--pair", "E3,E4", "--m-max", "3")
    assert code == 0
    data = json.loads(out)
    assert data["experiment"] == "moments"
    assert data["results"][2]["E4_second"] == pytest.approx(3)


def test_moments_csv_to_file(tmp_path, capsys):
    path = tmp_path / "m.csv"
    code, out = run(capsys, "moments", "--m-max", "2", "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("m,E3_mean")
    assert len(lines) == 3


def test_filter_and_discriminate(capsys):
    code, out = run(capsys, "filter", "--ensemble", "E5", "--n", "8", "--trials", "100")
    assert code == 0 and json.loads(out)["summary"]["all_trials_exactly_half"]
    code, out = run(capsys, "discriminate", "--n-max", "6")
    assert [r["n"] for r in json.loads(out)["results"]] == [2, 4, 6]


def test_flash_and_clone(capsys):
    code, out = run(capsys, "flash", "--phis", "0.2,1.5707963267948966")
    assert code == 0
    rows = json.loads(out)["results"]
    assert rows[1]["perfect_hypothetical_distance"] == pytest.approx(0.5)
    code, out = run(capsys, "clone", "--fidelity", "--samples", "50", "--seed", "4")
    assert code == 0
    assert json.loads(out)["results"][0]["average_fidelity"] == pytest.approx(5 / 6)


def test_ensemble_file_option(tmp_path, capsys):
    path = tmp_path / "e6.json"
    path.write_text(json.dumps(E.ensemble_to_dict(E.e6(6))))
    code, out = run(capsys, "filter", "--ensemble-file", str(path), "--n", "6", "--trials", "50")
    assert code == 0
    path2 = tmp_path / "e2.json"
    path2.write_text(json.dumps(E.ensemble_to_dict(E.e2())))
    code, out = run(capsys, "moments", "--ensemble-file", str(path), "--ensemble-file", str(path2), "--m-max", "2")
    assert code == 0
    assert json.loads(out)["params"]["pair"] == ["E6", "E2"]


@pytest.mark.parametrize("argv", [
    ["filter", "--n", "7"],
    ["moments", "--pair", "E3"],
    ["moments", "--m-max", "13"],
    ["moments", "--pair", "E3,E9"],
    ["clone", "--samples", "0"],
    ["filter", "--seed", "-1"],
    ["flash", "--phis", "9"],
    ["filter", "--ensemble-file", "/nonexistent.json"],
])
def test_invalid_arguments_exit_2(capsys, argv):
    assert cli.main(argv) == 2


def test_parser_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["bogus"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["flash", "--phis", "a,b"])
    assert info.value.code == 2


def test_numerical_failure_exits_3(monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise InvariantError("negative eigenvalue")

    monkeypatch.setattr(cli, "flash_report", broken)
    assert cli.main(["flash"]) == 3


@pytest.mark.parametrize("argv", [
    ["moments", "--m-max", "4", "--mc-samples", "2000", "--seed", "9"],
    ["filter", "--ensemble", "E6", "--n", "20", "--trials", "3000", "--seed", "9"],
    ["clone", "--samples", "100", "--seed", "9"],
    ["flash"],
    ["discriminate", "--n-max", "20"],
])
def test_same_seed_same_bytes(capsys, argv):
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert first == second


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qensembles", "discriminate", "--n-max", "2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["results"][0]["success_probability"] == 0.75
