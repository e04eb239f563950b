from __future__ import annotations

import json

from atsp_approx.cli import main
from atsp_approx.harness import instance_to_json
from fixtures import c3, two_tri


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_then_solve(tmp_path, capsys):
    code, out, _ = run_cli(capsys, ["gen", "--model", "two-cluster", "--n", "6",
                                    "--seed", "0"])
    assert code == 0
    path = tmp_path / "inst.json"
    path.write_text(out)
    code, out, _ = run_cli(capsys, ["solve", str(path), "--epsilon", "1",
                                    "--oracle"])
    assert code == 0
    doc = json.loads(out)
    assert doc["lp_value"] == "16"
    assert doc["held_karp_opt"] == "16"
    assert doc["instance"] == "two-cluster-6-0"


def test_solve_from_stdin(capsys, monkeypatch, tmp_path):
    payload = instance_to_json("c3", c3())
    import io
    import sys

    monkeypatch.setattr(sys, "stdin", io.StringIO(payload))
    code, out, _ = run_cli(capsys, ["solve", "-"])
    assert code == 0
    doc = json.loads(out)
    assert doc["ratio"] == "1"
    assert doc["tour_walk"] == [[0, 1], [1, 2], [2, 0]]


def test_solve_rejects_bad_input(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 2, "edges": [[0, 1, "1"]]}')  # not strongly connected
    code, _, err = run_cli(capsys, ["solve", str(path)])
    assert code == 1
    assert "strongly connected" in err


def test_solve_missing_file(capsys):
    code, _, err = run_cli(capsys, ["solve", "/nonexistent/file.json"])
    assert code == 1


def test_verify_roundtrip(tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    inst_path.write_text(instance_to_json("t", two_tri()))
    code, out, _ = run_cli(capsys, ["solve", str(inst_path)])
    assert code == 0
    report = tmp_path / "report.json"
    report.write_text(out)
    code, out, _ = run_cli(capsys, ["verify", str(inst_path), str(report)])
    assert code == 0
    doc = json.loads(out)
    assert doc["valid"] is True


def test_verify_rejects_partial_walk(tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    inst_path.write_text(instance_to_json("c3", c3()))
    tour_path = tmp_path / "tour.json"
    tour_path.write_text(json.dumps({"tour_walk": [[0, 1]]}))
    code, out, _ = run_cli(capsys, ["verify", str(inst_path), str(tour_path)])
    assert code == 1
    doc = json.loads(out)
    assert doc["valid"] is False


def test_oracle_tsplib(tmp_path, capsys):
    path = tmp_path / "inst.atsp"
    path.write_text(
        "NAME: tiny\nTYPE: ATSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\n"
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n"
        "0 1 9\n9 0 1\n1 9 0\nEOF\n"
    )
    code, out, _ = run_cli(capsys, ["oracle", str(path)])
    assert code == 0
    assert json.loads(out)["held_karp_opt"] == "3"


def test_bad_epsilon(tmp_path, capsys):
    path = tmp_path / "inst.json"
    path.write_text(instance_to_json("c3", c3()))
    code, _, err = run_cli(capsys, ["solve", str(path), "--epsilon", "0"])
    assert code == 1


def test_tsplib_solve_end_to_end(tmp_path, capsys):
    path = tmp_path / "five.atsp"
    rows = [
        "0 2 9 9 1.5",
        "9 0 2 9 9",
        "9 9 0 2 9",
        "2 9 9 0 9",
        "1.5 9 9 9 0",
    ]
    path.write_text(
        "NAME: five\nTYPE: ATSP\nDIMENSION: 5\nEDGE_WEIGHT_TYPE: EXPLICIT\n"
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n"
        + "\n".join(rows) + "\nEOF\n"
    )
    code, out, _ = run_cli(capsys, ["solve", str(path), "--format", "tsplib",
                                    "--oracle"])
    assert code == 0
    doc = json.loads(out)
    # sandwich holds with the exact rationals round-tripped as strings
    from fractions import Fraction

    lp = Fraction(doc["lp_value"])
    hk = Fraction(doc["held_karp_opt"])
    cost = Fraction(doc["tour_cost"])
    assert lp <= hk <= cost <= 23 * lp


def test_no_check_all_flag(tmp_path, capsys):
    path = tmp_path / "inst.json"
    path.write_text(instance_to_json("c3", c3()))
    code, out, _ = run_cli(capsys, ["solve", str(path), "--no-check-all"])
    assert code == 0
    doc = json.loads(out)
    # the expensive cut re-certification is skipped, the guarantee is not
    assert "x-feasible-all-cuts" not in doc["assertion_counts"]
    assert doc["assertion_counts"]["approximation-guarantee"] == 1
