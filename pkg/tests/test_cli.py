import csv
import io
import json

import numpy as np
import pytest

from liebox.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_pi_table_csv(capsys):
    code, out, _ = run_cli(capsys, "pi-table", "--order", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["permutation", "coefficient"]
    body = rows[1:]
    assert len(body) == 6
    assert sum(1 for _, v in body if v != "0") == 4


def test_pi_table_json(capsys):
    code, out, _ = run_cli(capsys, "pi-table", "--order", "2", "--no-timestamp")
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "pi-table"
    assert rep["nonzero"] == 2
    assert rep["version"]


def test_identities_baker(capsys):
    code, out, _ = run_cli(capsys, "identities", "--family", "baker")
    assert code == 0
    rep = json.loads(out)
    assert rep["failures"] == 0


def test_identities_j2_small(capsys):
    code, out, _ = run_cli(
        capsys, "identities", "--family", "j2",
        "--max-degree", "4", "--alphabet", "2",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["instances"] == 4 + 8 + 16
    assert rep["failures"] == 0


def test_identities_workers_match(capsys):
    code1, out1, _ = run_cli(
        capsys, "identities", "--family", "otto", "--max-degree", "4",
        "--alphabet", "2", "--no-timestamp",
    )
    code2, out2, _ = run_cli(
        capsys, "identities", "--family", "otto", "--max-degree", "4",
        "--alphabet", "2", "--no-timestamp", "--workers", "2",
    )
    assert code1 == code2 == 0
    a, b = json.loads(out1), json.loads(out2)
    assert a["rows"] == b["rows"]


def test_witness_nontrivial(tmp_path, capsys):
    poly = {
        "degree": 2,
        "alphabet": 2,
        "terms": [
            {"word": [1, 2], "coeff": "1"},
            {"word": [2, 1], "coeff": "-1"},
        ],
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(poly))
    code, out, _ = run_cli(capsys, "witness", "--poly", str(path))
    assert code == 0
    rep = json.loads(out)
    assert rep["trivial"] is False
    assert rep["certificate"]["sigma"] == [1, 2]
    assert rep["certificate"]["value"] == "1"


def test_witness_bad_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run_cli(capsys, "witness", "--poly", str(path))
    assert code == 2
    assert "error" in err


def test_bracket_value(capsys):
    code, out, _ = run_cli(
        capsys, "bracket", "--model", "heisenberg", "--word", "12",
        "--at", "0,0,0",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["value"] == [0.0, 0.0, 1.0]


def test_flow_point(capsys):
    code, out, _ = run_cli(
        capsys, "flow", "--model", "heisenberg", "--field", "1",
        "--t", "0.5", "--at", "0,0,0",
    )
    assert code == 0
    rep = json.loads(out)
    assert np.allclose(rep["point"], [0.5, 0.0, 0.0])


def test_limit_check(capsys):
    code, out, _ = run_cli(
        capsys, "limit-check", "--model", "heisenberg", "--word", "12",
        "--at", "0,0,0",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["converged"] is True
    assert abs(rep["exact"] - 1.0) < 1e-12


def test_emap(capsys):
    code, out, _ = run_cli(
        capsys, "emap", "--model", "heisenberg", "--frame", "1,2,4",
        "--center", "0,0,0", "--radius", "0.5", "--h", "0,0,0.3",
    )
    assert code == 0
    rep = json.loads(out)
    assert np.allclose(rep["point"], [0.0, 0.0, 0.3 * 0.25], atol=1e-8)
    assert abs(rep["det"] - 0.5**4) < 1e-4
    assert abs(rep["box_norm"] - 0.3**0.5) < 1e-12


def test_ballbox_inclusion(capsys):
    code, out, _ = run_cli(
        capsys, "ballbox", "--model", "heisenberg", "--center", "0,0,0",
        "--radius", "0.5", "--eta", "0.5", "--check-inclusion",
        "--samples", "20",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["maximal_frame"] == [1, 2, 4]
    assert rep["inclusion"]["solved_fraction"] == 1.0


def test_distance_fl(capsys):
    code, out, _ = run_cli(
        capsys, "distance", "--kind", "fl", "--model", "heisenberg",
        "--from", "0,0,0", "--to", "0.3,0,0",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "ok"
    assert abs(rep["value"] - 0.3) < 1e-4
    assert rep["certificate"]["form"] == "legs"
    assert rep["feasibility_trace"]


def test_doubling_small(capsys):
    code, out, _ = run_cli(
        capsys, "doubling", "--model", "flat2", "--center", "0,0",
        "--radius", "0.25", "--n", "20000", "--seed", "1",
    )
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["ratio"] - 4.0) < 0.5


def test_poincare_single_function(capsys):
    code, out, _ = run_cli(
        capsys, "poincare", "--model", "heisenberg", "--center", "0,0,0",
        "--radius", "0.3", "--n", "30000", "--f", "0",
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["rows"][0]["rhs"] > 0


def test_pinv_sweep(tmp_path, capsys):
    A = np.array([[1.0, 1.0], [0.0, 0.0]])
    b = np.array([[1.0], [0.0]])
    amat = tmp_path / "A.csv"
    rhs = tmp_path / "b.csv"
    np.savetxt(amat, A, delimiter=",")
    np.savetxt(rhs, b, delimiter=",")
    code, out, _ = run_cli(
        capsys, "pinv", "--matrix", str(amat), "--rhs", str(rhs),
        "--lambda-sweep",
    )
    assert code == 0
    rep = json.loads(out)
    assert np.allclose(rep["solution"], [0.5, 0.5], atol=1e-8)
    errs = [row["error"] for row in rep["sweep"]]
    assert errs == sorted(errs)  # error grows with lambda


def test_unknown_model_exits_2(capsys):
    code, _, err = run_cli(
        capsys, "flow", "--model", "nosuch", "--field", "1", "--t", "0.1",
        "--at", "0,0,0",
    )
    assert code == 2
    assert "unknown model" in err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["distance", "--kind", "nope", "--model", "heisenberg",
              "--from", "0,0,0", "--to", "1,0,0"])
    assert exc.value.code == 2


def test_report_determinism(capsys):
    argv = ["identities", "--family", "j2", "--max-degree", "3",
            "--alphabet", "2", "--no-timestamp"]
    _, out1, _ = run_cli(capsys, *argv)
    _, out2, _ = run_cli(capsys, *argv)
    assert out1 == out2


def test_suite_selected_criteria(capsys):
    code, out, _ = run_cli(capsys, "suite", "--criteria", "1,4")
    assert code == 0
    assert "ACCEPTANCE 01" in out
    assert "ACCEPTANCE 04" in out
