import csv
import json
import os
import subprocess
import sys

import pytest

from ndsr.cli import main, strip_timing


@pytest.fixture
def fixtures_dir(tmp_path):
    for name in ("figure1", "figure2"):
        assert main(["fixture", name, "-o", str(tmp_path / f"{name}.json")]) == 0
    return tmp_path


def _summary(capsys):
    return capsys.readouterr().out.strip().splitlines()[-1].split()


def test_generate_deterministic(tmp_path):
    args = ["generate", "--nodes", "30", "--arcs", "120", "--commodities", "90", "--levels", "MMMM", "--seed", "1"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_missing_flag(capsys):
    assert main(["generate", "--nodes", "30"]) == 2
    assert "usage" in capsys.readouterr().err


def test_generate_bad_spec(capsys):
    assert main(["generate", "--nodes", "30", "--arcs", "10", "--commodities", "3", "--levels", "MMMM"]) == 2
    assert main(["generate", "--nodes", "30", "--arcs", "80", "--commodities", "3", "--levels", "MMQM"]) == 2


def test_unknown_flag():
    assert main(["solve", "x.json", "--bogus"]) == 2


def test_solve_figure1_allpath(fixtures_dir, capsys):
    assert main(["solve", str(fixtures_dir / "figure1.json"), "--mode", "allpath"]) == 0
    fields = _summary(capsys)
    assert fields[:4] == ["optimal", "1", "1", "0.00"]
    assert len(fields) == 9 and fields[-1] == "1"


def test_solve_figure2_bcp_report(fixtures_dir, capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", str(fixtures_dir / "figure2.json"), "--mode", "bcp", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["value"] == 2.0
    assert doc["stats"]["root_lp"] == pytest.approx(1.5)
    assert doc["stats"]["root_lp_cuts"] == pytest.approx(2.0)
    assert doc["config"]["mode"] == "bcp" and doc["config"]["time_limit"] == 3600.0
    assert doc["cuts"][0]["family"] == "cut-cover"


def test_solve_alpha(fixtures_dir, capsys):
    assert main(["solve", str(fixtures_dir / "figure1.json"), "--alpha", "1.5"]) == 0
    assert _summary(capsys)[1] == "0"


def test_solve_bad_alpha(fixtures_dir):
    assert main(["solve", str(fixtures_dir / "figure1.json"), "--alpha", "0.5"]) == 2


def test_solve_infeasible_exit(tmp_path, fixtures_dir):
    doc = json.loads((fixtures_dir / "figure1.json").read_text())
    doc["commodities"][0]["W"] = [0]
    p = tmp_path / "inf.json"
    p.write_text(json.dumps(doc))
    assert main(["solve", str(p)]) == 4


def test_solve_time_limit_exit(fixtures_dir):
    assert main(["solve", str(fixtures_dir / "figure2.json"), "--time-limit", "1e-9"]) == 3


def test_enumeration_cap_exit(fixtures_dir):
    assert main(["solve", str(fixtures_dir / "figure2.json"), "--mode", "allpath", "--label-cap", "2"]) == 5


def test_missing_file():
    assert main(["solve", "/nonexistent/file.json"]) == 2


def test_compare(fixtures_dir, capsys):
    assert main(["compare", str(fixtures_dir / "figure1.json")]) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert [float(x) for x in row[1:4]] == [0.5, 1.0, 1.0]
    assert main(["compare", str(fixtures_dir / "figure2.json")]) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    af, path, ilp = (float(x) for x in row[1:4])
    assert af <= 1.5 + 1e-6 and path == 1.5 and ilp == 2


def test_compare_random_chain(tmp_path, capsys):
    p = tmp_path / "g.json"
    main(["generate", "--nodes", "8", "--arcs", "20", "--commodities", "4", "--levels", "MMMM", "--seed", "5", "-o", str(p)])
    assert main(["compare", str(p)]) == 0
    af, path, ilp = (float(x) for x in capsys.readouterr().out.strip().splitlines()[-1].split(",")[1:4])
    assert af <= path + 1e-6 <= ilp + 2e-6


def test_enumerate_and_validate(fixtures_dir, capsys, tmp_path):
    out = tmp_path / "e.json"
    assert main(["enumerate", str(fixtures_dir / "figure2.json"), "-o", str(out)]) == 0
    assert json.loads(out.read_text())["total"] == 6
    assert main(["validate", str(fixtures_dir / "figure1.json")]) == 0
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1])["ok"] is True


def test_batch_csv(tmp_path, capsys):
    d = tmp_path / "batch"
    d.mkdir()
    for seed in (1, 2):
        main(["generate", "--nodes", "8", "--arcs", "20", "--commodities", "3", "--levels", "MMMM",
              "--seed", str(seed), "-o", str(d / f"i{seed}.json")])
    out = tmp_path / "agg.csv"
    assert main(["solve", str(d), "--mode", "allpath", "-o", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["scenario", "instances", "opt", "mean_gap", "mean_time", "mean_paths", "mean_nodes", "mean_columns"]
    assert rows[1][:3] == ["8/20/3/MMMM", "2", "2"]
    assert float(rows[1][5]) > 0


def test_hidden_oracle(fixtures_dir, capsys):
    out = subprocess.run([sys.executable, "-m", "ndsr", "--help"], capture_output=True, text=True)
    assert "oracle" not in out.stdout and "solve" in out.stdout
    assert main(["oracle", "solve", str(fixtures_dir / "figure2.json")]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 2
    assert main(["oracle", "paths", str(fixtures_dir / "figure2.json")]) == 0
    assert json.loads(capsys.readouterr().out)["total"] == 6


@pytest.mark.parametrize("mode", ["allpath", "bnp", "bcp"])
def test_solve_report_deterministic(fixtures_dir, tmp_path, mode):
    out = tmp_path / "r.json"
    args = ["solve", str(fixtures_dir / "figure2.json"), "--mode", mode, "-o", str(out)]
    main(args)
    first = strip_timing(json.loads(out.read_text()))
    os.remove(out)
    main(args)
    assert strip_timing(json.loads(out.read_text())) == first
