"""
Command-line front door: exit codes, result documents and artifacts.
"""
import json

import numpy as np
import pytest

import cli
from cli import EXIT_DOMAIN_ERROR, EXIT_OK, EXIT_USAGE, parse_alphas, run


def _write(tmp_path, name, document):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def _result(out_dir):
    return json.loads((out_dir / "result.json").read_text(encoding="utf-8"))


def test_classify(tmp_path):
    code = run(["classify", "--a", "-0.595", "--alpha", "0.476", "--gamma", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert _result(tmp_path)["case"] == "B"


def test_classify_requires_parameters(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["classify", "--a", "-0.595", "--out", str(tmp_path)])
    assert exc.value.code == EXIT_USAGE


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        run(["optimize"])
    assert exc.value.code == EXIT_USAGE


def test_document_command_requires_input(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["riccati", "--out", str(tmp_path)])
    assert exc.value.code == EXIT_USAGE


def test_missing_input_file(tmp_path):
    code = run(["solve-scalar", str(tmp_path / "missing.json"), "--out", str(tmp_path / "out")])
    assert code == EXIT_USAGE
    assert _result(tmp_path / "out")["error"] == "file_not_found"


def test_domain_error_document(tmp_path, scalar_document):
    problem = _write(tmp_path, "unstable.json", {**scalar_document, "A": 0.5})
    code = run(["solve-scalar", "--input", problem, "--out", str(tmp_path / "out")])
    assert code == EXIT_DOMAIN_ERROR
    doc = _result(tmp_path / "out")
    assert doc["error"] == "not_hurwitz"
    assert doc["details"]["max_real_eigenvalue"] == pytest.approx(0.5)


def test_invalid_document(tmp_path):
    problem = _write(tmp_path, "bad.json", {"A": -1.0})
    code = run(["riccati", problem, "--out", str(tmp_path / "out")])
    assert code == EXIT_DOMAIN_ERROR
    assert _result(tmp_path / "out")["error"] == "invalid_problem"


def test_stationary_case_a(tmp_path, scalar_document):
    problem = _write(tmp_path, "problem.json", scalar_document)
    code = run(["solve-stationary", problem, "--out", str(tmp_path / "out")])
    assert code == EXIT_OK
    doc = _result(tmp_path / "out")
    assert doc["x_star"] == pytest.approx(1.0, abs=1e-6)
    assert doc["u_star"] == pytest.approx(0.0, abs=1e-6)
    assert (tmp_path / "out" / "block_spectrum.csv").is_file()


def test_alpha_override(tmp_path, scalar_document):
    problem = _write(tmp_path, "problem.json", {**scalar_document, "A": -0.595, "gamma": 1.0, "X0": 0.5})
    code = run(["solve-scalar", problem, "--alpha", "0.926", "--out", str(tmp_path / "out")])
    assert code == EXIT_OK
    assert _result(tmp_path / "out")["subcase"] == "A-1"


def test_riccati_output_is_deterministic(tmp_path, scheduled_document):
    problem = _write(tmp_path, "problem.json", scheduled_document)
    out = tmp_path / "out"
    assert run(["riccati", problem, "--dt", "0.01", "--out", str(out)]) == EXIT_OK
    first = ((out / "result.json").read_bytes(), (out / "trajectory.csv").read_bytes())
    assert run(["riccati", problem, "--dt", "0.01", "--out", str(out)]) == EXIT_OK
    second = ((out / "result.json").read_bytes(), (out / "trajectory.csv").read_bytes())
    assert first == second


def test_parse_alphas():
    assert parse_alphas("0.01, 0.1,1") == [0.01, 0.1, 1.0]


def test_non_finite_system_is_a_domain_error(tmp_path):
    problem = tmp_path / "nan.json"
    problem.write_text('{"A": [[NaN]], "B": [[1.0]], "alpha": 1.0, "gamma": 1.0}', encoding="utf-8")
    code = run(["solve-stationary", str(problem), "--out", str(tmp_path / "out")])
    assert code == EXIT_DOMAIN_ERROR
    doc = _result(tmp_path / "out")
    assert doc["error"] == "invalid_system"
    assert doc["details"]["matrix"] == "A"


def test_unexpected_failure_still_writes_a_result(tmp_path, scalar_document, monkeypatch):
    def broken_dispatch(service, args, document):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(cli, "dispatch", broken_dispatch)
    problem = _write(tmp_path, "problem.json", scalar_document)
    code = run(["solve-stationary", problem, "--out", str(tmp_path / "out")])
    assert code == EXIT_DOMAIN_ERROR
    doc = _result(tmp_path / "out")
    assert doc["error"] == "internal_error"
    assert "SVD did not converge" in doc["message"]
    assert doc["details"] == {"command": "solve-stationary"}


def test_workers_help_names_threads():
    help_text = cli.build_parser().format_help()
    assert "worker threads" in help_text
