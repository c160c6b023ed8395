"""
Problem and result documents.
"""
import json

import numpy as np
import pytest

from models.errors import DimensionMismatch, InvalidProblem, NotHurwitz
from models.schemas import (
    ErrorResult,
    ProblemDocument,
    ScheduleDocument,
    build_problem,
    document_channel,
    document_schedule,
    load_document,
    load_problem,
)


class TestLoading:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_document(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(InvalidProblem) as exc:
            load_document(path)
        assert exc.value.details["path"] == str(path)

    def test_missing_field(self):
        with pytest.raises(InvalidProblem) as exc:
            load_document({"A": -1.0, "B": 1.0, "gamma": 1.0})
        assert exc.value.details["errors"]

    def test_ragged_matrix(self):
        with pytest.raises(InvalidProblem):
            load_document({"A": [[-1.0, 0.0], [0.0]], "B": 1.0, "alpha": 1.0, "gamma": 1.0})

    def test_file_round(self, tmp_path, scalar_document):
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(scalar_document), encoding="utf-8")
        system, horizon = load_problem(path)
        assert system.n == 1
        assert horizon.alpha == 2.0
        assert horizon.X0[0, 0] == 1.0


class TestBuildProblem:
    def test_scalar_x0_broadcasts(self, scheduled_document):
        _, horizon = build_problem(ProblemDocument.model_validate(scheduled_document))
        np.testing.assert_array_equal(horizon.X0, 0.5 * np.eye(2))

    def test_domain_checks_run(self, scalar_document):
        with pytest.raises(NotHurwitz):
            build_problem(ProblemDocument.model_validate({**scalar_document, "A": 0.5}))

    def test_shape_mismatch(self, scalar_document):
        with pytest.raises(DimensionMismatch):
            build_problem(ProblemDocument.model_validate({**scalar_document, "B": [[1.0, 0.0], [0.0, 1.0]]}))


class TestSchedules:
    def test_exactly_one_representation(self):
        with pytest.raises(ValueError):
            ScheduleDocument(breakpoints=[0.0, 1.0])
        with pytest.raises(ValueError):
            ScheduleDocument(breakpoints=[0.0, 1.0], values=[1.0], gains=[1.0])

    def test_no_schedule(self, scalar_document):
        document = ProblemDocument.model_validate(scalar_document)
        assert document_schedule(document) is None
        assert document_channel(document) is None

    def test_values_map_to_square_root_gains(self, scheduled_document):
        scheduled_document["schedule"]["values"][0] = [[4.0, 0.0], [0.0, 9.0]]
        document = ProblemDocument.model_validate(scheduled_document)
        channel = document_channel(document)
        np.testing.assert_allclose(channel.gains[0], np.diag([2.0, 3.0]), atol=1e-12)
        schedule = document_schedule(document)
        assert schedule.breakpoints == (0.0, 0.4, 1.0)
        np.testing.assert_array_equal(schedule.values[0], np.diag([4.0, 9.0]))

    def test_gains_become_controls(self, scalar_document):
        document = ProblemDocument.model_validate(
            {**scalar_document, "schedule": {"breakpoints": [0.0, 0.5, 1.0], "gains": [2.0, 0.0]}}
        )
        schedule = document_schedule(document)
        assert schedule.values[0][0, 0] == pytest.approx(4.0)
        assert schedule.values[1][0, 0] == 0.0


def test_error_result_document():
    doc = ErrorResult(error="not_hurwitz", message="A is not stable").model_dump()
    assert doc == {"error": "not_hurwitz", "message": "A is not stable", "details": {}}
