import csv
import io
import json

import pytest

from opinion_mf.cli import main
from opinion_mf.explab import CSV_COLUMNS


@pytest.fixture
def two_csv(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text("0,1\n")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_gap_canonical(capsys, two_csv):
    code, out, _ = run(capsys, "gap", "--model", "und", "--n", "2", "--p", "0.5", "--alpha", "const:0.5",
                       "--x0", f"file:{two_csv}", "--norm", "inf", "--exact")
    assert code == 0
    rec = json.loads(out)
    assert f"{rec['gap']:.7f}" == "0.0833333"
    assert {"gap", "ci", "wall_ms", "n", "p", "norm"} <= set(rec)


def test_gap_mc_csv(capsys):
    code, out, _ = run(capsys, "--format", "csv", "gap", "--model", "dir", "--n", "6", "--regime", "3,1",
                       "--norm", "rho=2", "--samples", "40", "--alpha", "random", "--alpha-bar", "0.9")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["ci"]) > 0


def test_sweep_exact_single_row(capsys, two_csv, tmp_path):
    out_path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--ladder", "2", "--exact", "--regime", "1,0", "--alpha", "const:0.5",
                     "--x0", f"file:{two_csv}", "--out", str(out_path))
    assert code == 0
    rows = list(csv.reader(out_path.open()))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 2
    assert float(rows[1][CSV_COLUMNS.index("gap")]) == pytest.approx(1 / 12)


def test_sweep_config_and_assert(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "und", "n_ladder": [2, 3], "regime": {"c": 1, "a": 0},
                               "alpha_rule": "const:0.5", "x0_rule": "ones", "exact": True}))
    code, out, err = run(capsys, "sweep", "--config", str(cfg), "--assert")
    assert code == 2  # all gaps are zero, so nothing decreases
    assert "FAIL" in err
    code, _, _ = run(capsys, "sweep", "--config", str(cfg), "--x0", "random", "--assert")
    assert code == 0


def test_sweep_rejects_rho_on_undirected(capsys):
    code, _, err = run(capsys, "sweep", "--model", "und", "--norm", "rho=2", "--ladder", "8,16")
    assert code == 1 and "open question" in err


def test_verify_exits_zero(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    header = out.splitlines()[0]
    assert header == "lemma,params,lhs,bound,margin,status"


def test_sample_and_stable(capsys, tmp_path):
    code, out, _ = run(capsys, "--seed", "4", "sample", "--n", "5", "--p", "0.6")
    assert code == 0 and out.splitlines()[0] == "5 0"
    g = tmp_path / "g.txt"
    g.write_text(out)
    code, out, _ = run(capsys, "stable", "--graph", str(g), "--x0", "ones")
    assert code == 0
    assert json.loads(out)["stable"] == pytest.approx([1.0] * 5)


def test_enumerate_and_meanfield(capsys, two_csv):
    code, out, _ = run(capsys, "enumerate", "--model", "dir", "--n", "2", "--p", "0.5")
    assert code == 0 and len(out.splitlines()) == 5
    code, out, _ = run(capsys, "meanfield", "--n", "2", "--p", "0.5", "--x0", f"file:{two_csv}")
    assert json.loads(out)["meanfield_stable"] == pytest.approx([0.25, 0.75])


def test_optdemo(capsys):
    code, out, _ = run(capsys, "optdemo", "--n", "4", "--p", "0.5", "--seed", "1")
    rec = json.loads(out)
    assert code == 0 and rec["coincide"] is True


def test_usage_errors(capsys):
    assert run(capsys, "gap", "--bogus")[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    code, _, err = run(capsys, "gap", "--n", "2", "--p", "1.5")
    assert code == 1 and "p must lie" in err
    assert run(capsys, "stable", "--graph", "/nonexistent/file")[0] == 1
