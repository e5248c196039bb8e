import json
import math
import subprocess
import sys

import numpy as np
import pytest

from logvol.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from logvol.io import write_design, write_response


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    write_design(tmp_path / "sat.csv", [[0.0], [1.0]])
    write_design(tmp_path / "i2.csv", [[1.0, 0.0], [0.0, 1.0]])
    write_design(tmp_path / "flat.csv", [[1.0, 2.0], [2.0, 4.0], [0.5, 1.0]])
    return tmp_path


def test_volume_of_saturated_column(capsys, files):
    code, out, _ = run(capsys, "volume", "--design", files / "sat.csv")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["command"] == "volume"
    assert doc["config"]["design"] == str(files / "sat.csv")
    assert doc["config"]["integration"]["rel_tol"] == doc["config"]["tol"]
    assert doc["result"]["value"] == pytest.approx(math.pi, rel=1e-8)
    assert doc["result"]["converged"] is True


def test_rank_deficient_design_reports_zero(capsys, files):
    code, out, _ = run(capsys, "volume", "--design", files / "flat.csv")
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["value"] == 0.0
    assert "rank < q" in res["note"]


def test_budget_exhaustion_exits_numeric(capsys, files):
    code, out, _ = run(capsys, "volume", "--design", files / "i2.csv", "--max-evals", 50, "--tol", 1e-12)
    assert code == EXIT_NUMERIC
    assert json.loads(out)["result"]["converged"] is False


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["volume"], "--design"),
        (["volume", "--design", "missing.csv"], "cannot read"),
        (["frobnicate"], "invalid choice"),
        (["volume", "--design", "x", "--threads", "0"], "threads"),
        (["duality", "--demo", "3"], "--demo"),
    ],
)
def test_usage_errors_exit_one(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert needle in err


def test_bad_design_line_number(capsys, tmp_path):
    (tmp_path / "bad.csv").write_text("1,2\n3,oops\n")
    code, _, err = run(capsys, "volume", "--design", tmp_path / "bad.csv")
    assert code == EXIT_USAGE
    assert "bad.csv:2:" in err


def test_select_ranks_and_checks_lengths(capsys, files):
    rng = np.random.default_rng(0)
    X1 = np.column_stack([np.ones(30), rng.standard_normal(30)])
    X2 = np.column_stack([X1, rng.standard_normal(30)])
    y = (rng.random(30) < 1 / (1 + np.exp(-2 * X1[:, 1]))).astype(int)
    d = files / "cands"
    d.mkdir()
    write_design(d / "small.csv", X1)
    write_design(d / "big.csv", X2)
    write_response(files / "y.txt", y)
    code, out, _ = run(capsys, "select", "--designs", d, "--response", files / "y.txt")
    assert code == EXIT_OK
    ranking = json.loads(out)["result"]["ranking"]
    assert {r["name"] for r in ranking} == {"small", "big"}
    totals = [r["total"] for r in ranking]
    assert totals == sorted(totals)
    for r in ranking:
        assert r["total"] == pytest.approx(r["fit_term"] + r["complexity_term"])

    write_response(files / "short.txt", y[:10])
    code, _, err = run(capsys, "select", "--designs", d, "--response", files / "short.txt")
    assert code == EXIT_USAGE
    assert "10 entries" in err and "30 rows" in err


def test_select_requires_response(capsys, files):
    code, _, err = run(capsys, "select", "--design", files / "sat.csv")
    assert code == EXIT_USAGE and "--response" in err


def test_duality_demo(capsys, tmp_path):
    code, out, _ = run(capsys, "duality", "--demo", "2,3", "--radii", "5,20",
                       "--samples", 2000, "--csv", tmp_path / "c.csv")
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["full_sign_face_count"] == 6
    assert (tmp_path / "c.csv").read_text().startswith("r,")


def test_figure1(capsys, tmp_path):
    code, out, _ = run(capsys, "figure1", "--x1", "1,0", "--points", 11, "--csv", tmp_path / "f.csv")
    assert code == EXIT_OK
    vols = json.loads(out)["result"]["volumes"]
    assert [v["x1"] for v in vols] == [1.0, 0.0]
    assert vols[0]["value"] == pytest.approx(math.sqrt(2) * math.pi, rel=1e-7)
    assert vols[1]["value"] == pytest.approx(math.pi, rel=1e-7)
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 1 + 22


def test_output_is_byte_identical_across_processes(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / "o.json"
        subprocess.run(
            [sys.executable, "-m", "logvol.cli", "duality", "--demo", "2,3", "--radii", "10",
             "--samples", "500", "--seed", "7", "--out", str(path)],
            check=True,
        )
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
