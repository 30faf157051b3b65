from __future__ import annotations

import json
from pathlib import Path

from dsirup.cli import run

from .conftest import FIXTURES


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_validate(capsys):
    code, report = _run(capsys, "validate", str(FIXTURES / "q4.cq"))
    assert code == 0
    assert report["verdict"]["shape"]["lambda_span"] == 1


def test_validate_empty_file(tmp_path, capsys):
    path = tmp_path / "empty.cq"
    path.write_text("")
    code, report = _run(capsys, "validate", str(path))
    assert code == 0
    assert report["verdict"]["nodes"] == 0


def test_validate_missing_file(capsys):
    code, report = _run(capsys, "validate", "no_such_file.cq")
    assert code == 1
    assert "error" in report["verdict"]


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.cq"
    path.write_text("T(a")
    code, report = _run(capsys, "validate", str(path))
    assert code == 1


def test_classify_q4(capsys):
    code, report = _run(capsys, "classify", str(FIXTURES / "q4.cq"))
    assert code == 0
    assert report["verdict"]["exact"] == "L-complete"


def test_evaluate_q2_d2(capsys):
    code, report = _run(
        capsys,
        "evaluate",
        "--query", str(FIXTURES / "q2.cq"),
        "--data", str(FIXTURES / "d2.data"),
        "--program", "delta",
    )
    assert code == 0
    assert report["verdict"]["answer"] is True


def test_evaluate_cap_exit_code(tmp_path, capsys):
    data = tmp_path / "big.data"
    data.write_text("".join(f"A(a{i}).\n" for i in range(30)))
    code, report = _run(
        capsys,
        "evaluate",
        "--query", str(FIXTURES / "q4.cq"),
        "--data", str(data),
    )
    assert code == 2
    assert report["caps_hit"] is True


def test_bounded_q4_with_witness(tmp_path, capsys):
    code, report = _run(
        capsys,
        "bounded",
        "--query", str(FIXTURES / "q4.cq"),
        "--emit-witness",
        "--out", str(tmp_path),
    )
    assert code == 0
    assert report["verdict"]["verdict"] == "L-hard"
    files = report["verdict"]["witness_files"]
    assert Path(files["periodic"]).exists()


def test_bounded_q5(capsys):
    code, report = _run(capsys, "bounded", "--query", str(FIXTURES / "q5.cq"))
    assert code == 0
    assert report["verdict"]["verdict"] == "FO"
    assert report["verdict"]["empirical_bound"] == 1


def test_bounded_rejects_shape(capsys):
    code, report = _run(capsys, "bounded", "--query", str(FIXTURES / "q1.cq"))
    assert code == 1


def test_rewrite_q5(tmp_path, capsys):
    code, report = _run(
        capsys,
        "rewrite",
        "--query", str(FIXTURES / "q5.cq"),
        "--depth", "1",
        "--out", str(tmp_path),
    )
    assert code == 0
    assert report["verdict"]["count"] == 2
    assert len(report["verdict"]["files"]) == 2


def test_cactus_emission(tmp_path, capsys):
    code, report = _run(
        capsys,
        "cactus",
        "--query", str(FIXTURES / "q6.cq"),
        "--depth", "1",
        "--out", str(tmp_path),
    )
    assert code == 0
    assert report["verdict"]["count"] == 4
    skeleton = report["verdict"]["skeletons"][0]
    assert "segments" in skeleton


def test_reduce_dag(tmp_path, capsys):
    graph = tmp_path / "graph.json"
    graph.write_text(
        json.dumps({"vertices": ["a", "b"], "edges": [["a", "b"]], "s": "a", "t": "b"})
    )
    code, report = _run(
        capsys,
        "reduce",
        "--query", str(FIXTURES / "q3.cq"),
        "--kind", "dag",
        "--graph", str(graph),
        "--out", str(tmp_path),
    )
    assert code == 0
    assert Path(report["verdict"]["file"]).exists()


def test_gadget_compile_and_verify(tmp_path, capsys):
    formula = tmp_path / "formula.json"
    formula.write_text(
        json.dumps(
            {"gates": "NOT(y1)", "n_vars": 1, "input_types": [["down", 1]]}
        )
    )
    code, report = _run(
        capsys, "gadget", "compile", "--formula", str(formula), "--out", str(tmp_path)
    )
    assert code == 0
    assert Path(report["verdict"]["file"]).exists()
    code, report = _run(
        capsys,
        "gadget", "verify",
        "--formula", str(formula),
        "--depth", "1",
        "--cap", "6",
    )
    assert code == 0
    assert report["verdict"]["holds"] is True
    assert report["verdict"]["checks"] > 0


def test_schema_org_roundtrip(capsys):
    code, report = _run(
        capsys,
        "schema-org",
        "--query", str(FIXTURES / "q4.cq"),
        "--data", str(FIXTURES / "d1.data"),
    )
    assert code == 0
    assert report["verdict"]["preserved"] is True


def test_reports_deterministic(capsys):
    _, first = _run(capsys, "classify", str(FIXTURES / "q5.cq"))
    _, second = _run(capsys, "classify", str(FIXTURES / "q5.cq"))
    first.pop("timing")
    second.pop("timing")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)
