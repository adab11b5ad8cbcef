import csv
import json

import numpy as np
import pytest

from driftopt.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def solve_qp(tmp_path, capsys, iters=2000, extra=()):
    out = tmp_path / "qp.csv"
    code, stdout, _ = run_cli(
        capsys, "solve", "--builtin", "qp_6_2", "--algorithm", "dpp",
        "--iters", str(iters), "--out", str(out), *extra)
    assert code == 0
    return out, json.loads(stdout)


def test_solve_writes_csv_and_summary(tmp_path, capsys):
    out, summary = solve_qp(tmp_path, capsys)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "f_avg", "f_err", "g_1", "g_2", "qnorm",
                       "lambda_dist", "dual_gap"]
    assert int(rows[1][0]) == 1
    assert int(rows[-1][0]) == 2000
    # 17-significant-digit numbers round-trip exactly
    v = float(rows[-1][1])
    assert f"{v:.17g}" == rows[-1][1]
    assert summary["final"]["t"] == 2000
    assert (out.parent / (out.name + ".summary.json")).exists()


def test_solve_is_deterministic(tmp_path, capsys):
    a, _ = solve_qp(tmp_path, capsys)
    first = a.read_bytes()
    b, _ = solve_qp(tmp_path, capsys)
    assert b.read_bytes() == first


def test_solve_rejects_zero_iters(tmp_path, capsys):
    code, _, err = run_cli(capsys, "solve", "--builtin", "qp_6_2",
                           "--iters", "0", "--out", str(tmp_path / "x.csv"))
    assert code == 2
    assert "iters" in err


def test_solve_rejects_bad_flags(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "solve", "--builtin", "qp_6_2",
                         "--iters", "10", "--sample", "bogus",
                         "--out", str(tmp_path / "x.csv"))
    assert code == 2
    code, _, _ = run_cli(capsys, "solve", "--builtin", "nope",
                         "--iters", "10", "--out", str(tmp_path / "x.csv"))
    assert code == 2


def test_solve_requires_exactly_one_problem_source(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "solve", "--iters", "10",
                         "--out", str(tmp_path / "x.csv"))
    assert code == 2


def test_solve_q0_broadcast(tmp_path, capsys):
    out = tmp_path / "q.csv"
    code, stdout, _ = run_cli(
        capsys, "solve", "--builtin", "qp_6_2", "--iters", "50",
        "--q0", "10", "--out", str(out))
    assert code == 0
    assert json.loads(stdout)["q0"] == [10.0, 10.0]


def test_solve_linear_sampling(tmp_path, capsys):
    out = tmp_path / "lin.csv"
    code, _, _ = run_cli(capsys, "solve", "--builtin", "qp_6_2",
                         "--iters", "20", "--sample", "linear:5",
                         "--out", str(out))
    assert code == 0
    with open(out, newline="") as fh:
        ts = [int(r["t"]) for r in csv.DictReader(fh)]
    assert ts == [5, 10, 15, 20]


def test_fit_on_synthetic_csv(tmp_path, capsys):
    path = tmp_path / "synthetic.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "f_avg", "f_err", "g_1", "qnorm"])
        for t in np.unique(np.round(np.logspace(0, 4, 100))).astype(int):
            w.writerow([t, 0.0, 1.0 / t, 0.5 / t, 0.0])
    code, stdout, _ = run_cli(capsys, "fit", "--trace", str(path),
                              "--series", "obj", "--model", "power")
    assert code == 0
    fit = json.loads(stdout)
    assert abs(fit["p"] - 1.0) < 1e-6
    code, stdout, _ = run_cli(capsys, "fit", "--trace", str(path),
                              "--series", "constraint", "--model", "power")
    assert code == 0
    assert abs(json.loads(stdout)["p"] - 1.0) < 1e-6


def test_fit_missing_column(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("t,qnorm\n1,0.0\n2,0.0\n")
    code, _, err = run_cli(capsys, "fit", "--trace", str(path),
                           "--series", "obj", "--model", "power")
    assert code == 2
    assert "f_err" in err


def test_fit_on_real_trace(tmp_path, capsys):
    out, _ = solve_qp(tmp_path, capsys, iters=20_000)
    code, stdout, _ = run_cli(capsys, "fit", "--trace", str(out),
                              "--series", "constraint", "--model", "power",
                              "--t-lo", "1000", "--t-hi", "20000")
    assert code == 0
    assert 0.85 <= json.loads(stdout)["p"] <= 1.15


def test_audit_passes_on_compliant_run(tmp_path, capsys):
    out, _ = solve_qp(tmp_path, capsys, iters=5000)
    code, stdout, _ = run_cli(capsys, "audit", "--builtin", "qp_6_2",
                              "--trace", str(out))
    assert code == 0
    report = json.loads(stdout)
    assert all(e["pass"] for e in report if e["applicable"])


def test_audit_truncated_csv(tmp_path, capsys):
    out, _ = solve_qp(tmp_path, capsys, iters=200)
    lines = out.read_text().splitlines()
    out.write_text("\n".join(lines[:4] + [lines[4][:8]]) + "\n")
    code, _, _ = run_cli(capsys, "audit", "--builtin", "qp_6_2",
                         "--trace", str(out))
    assert code == 2


def test_kkt_outputs(capsys):
    code, stdout, _ = run_cli(capsys, "kkt", "--builtin", "num_6_1")
    assert code == 0
    doc = json.loads(stdout)
    assert doc["active_constraints"] == [1, 3]
    assert doc["slack_constraints"] == [2]

    code, stdout, _ = run_cli(capsys, "kkt", "--builtin", "qp_6_2")
    doc = json.loads(stdout)
    assert np.allclose(doc["x_star"], [-1.0, -1.0])
    assert doc["f_star"] == pytest.approx(8.0, abs=1e-9)

    code, stdout, _ = run_cli(capsys, "kkt", "--builtin",
                              "num_5_2_rank_deficient")
    doc = json.loads(stdout)
    assert np.allclose(doc["lambda_star"], [0.3858, 0.0903, 0.7833, 0.0805],
                       atol=1e-3)


def test_info_lists_builtins(capsys):
    code, stdout, _ = run_cli(capsys, "info")
    assert code == 0
    docs = json.loads(stdout)
    assert {d["tag"] for d in docs} == {"num_6_1", "qp_6_2",
                                        "num_5_2_rank_deficient"}
    assert all(d["has_reference"] for d in docs)


def test_solve_with_problem_file(tmp_path, capsys):
    from driftopt import builtin, serialize
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(serialize(builtin("qp_6_2"))))
    out = tmp_path / "mine.csv"
    code, _, _ = run_cli(capsys, "solve", "--problem", str(path),
                         "--iters", "100", "--out", str(out))
    assert code == 0
    assert out.exists()
