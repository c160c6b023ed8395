"""
Service layer and HTTP API.
"""
import logging
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from models.schemas import (
    ClassifyResult,
    ProblemDocument,
    RiccatiResult,
    ScalarSolutionResult,
    SimulationResult,
    StationaryResult,
)
import services.gain_control_service as gain_control_service
from services.gain_control_service import GainControlService
from services.main import app

from tests.conftest import A_REF, ALPHA_CASE_B, GAMMA_REF


@pytest.fixture
def client():
    return TestClient(app)


@pytest.fixture
def service(tmp_path):
    return GainControlService(output_dir=str(tmp_path), max_workers=1)


class TestGainControlService:
    def test_classify(self, service):
        success, payload, message = service.classify(A_REF, ALPHA_CASE_B, GAMMA_REF)
        assert success
        assert message == "Case B"
        result = ClassifyResult.model_validate(payload)
        assert result.case == "B"
        assert result.threshold_low < ALPHA_CASE_B < result.threshold_high

    def test_classify_rejects_unstable_drift(self, service):
        success, payload, _ = service.classify(0.5, 1.0, 1.0)
        assert not success
        assert set(payload) == {"error", "message", "details"}

    def test_solve_scalar_writes_trajectory(self, service, tmp_path):
        document = ProblemDocument(A=A_REF, B=1.0, X0=0.5, t1=1.0, alpha=ALPHA_CASE_B, gamma=GAMMA_REF)
        success, payload, _ = service.solve_scalar(document)
        assert success
        result = ScalarSolutionResult.model_validate(payload)
        assert result.subcase == "B-1"
        assert result.artifacts == [str(tmp_path / "scalar_trajectory.csv")]
        assert Path(result.artifacts[0]).read_text().startswith("t,x,p,u")

    def test_riccati_needs_a_schedule(self, service, scalar_document):
        success, payload, _ = service.riccati(ProblemDocument.model_validate(scalar_document))
        assert not success
        assert payload["error"] == "invalid_schedule"

    def test_riccati_result(self, service, scheduled_document):
        success, payload, _ = service.riccati(ProblemDocument.model_validate(scheduled_document), emit_csv=False)
        assert success
        result = RiccatiResult.model_validate(payload)
        assert result.artifacts == []
        assert result.cost == pytest.approx(result.mse_integral + 2 * 0.1 * result.mi)

    def test_simulate_bad_arguments(self, service, scheduled_document):
        success, payload, _ = service.simulate(ProblemDocument.model_validate(scheduled_document), 1, 0.01, 0)
        assert not success
        assert payload["error"] == "invalid_problem"

    def test_simulate_small_run(self, service, scheduled_document):
        success, payload, _ = service.simulate(
            ProblemDocument.model_validate(scheduled_document), 64, 0.01, 3, emit_paths=True
        )
        assert success
        result = SimulationResult.model_validate(payload)
        assert result.num_paths == 64
        assert Path(result.artifacts[0]).name == "paths.csv"

    def test_non_finite_system(self, service, scalar_document):
        document = ProblemDocument.model_validate({**scalar_document, "B": float("inf")})
        success, payload, _ = service.solve_stationary(document)
        assert not success
        assert payload["error"] == "invalid_system"
        assert payload["details"]["matrix"] == "B"

    def test_linear_algebra_failure_becomes_an_error_document(self, service, scalar_document, monkeypatch):
        def diverging(*args, **kwargs):
            raise np.linalg.LinAlgError("Eigenvalues did not converge")

        monkeypatch.setattr(gain_control_service, "solve_stationary", diverging)
        success, payload, message = service.solve_stationary(ProblemDocument.model_validate(scalar_document))
        assert not success
        assert payload["error"] == "numerical_failure"
        assert "Eigenvalues did not converge" in message

    def test_stationary_writes_spectrum(self, service, scalar_document, tmp_path):
        success, payload, _ = service.solve_stationary(ProblemDocument.model_validate(scalar_document))
        assert success
        result = StationaryResult.model_validate(payload)
        assert (tmp_path / "block_spectrum.csv").is_file()
        assert result.x_star == pytest.approx(1.0, abs=1e-6)


class TestApi:
    def test_ping(self, client):
        response = client.get("/ping")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_lifecycle_is_logged(self, caplog):
        with caplog.at_level(logging.INFO, logger="kbgain"):
            with TestClient(app) as client:
                assert client.get("/ping").status_code == 200
        assert "🚀" in caplog.text
        assert "🛑" in caplog.text

    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "healthy"
        assert body["config_problems"] == []

    def test_classify(self, client):
        response = client.post("/classify", json={"a": A_REF, "alpha": ALPHA_CASE_B, "gamma": GAMMA_REF})
        assert response.status_code == 200
        assert response.json()["case"] == "B"

    def test_solve_scalar(self, client):
        problem = {"A": A_REF, "B": 1.0, "X0": 0.5, "t1": 1.0, "alpha": 0.926, "gamma": 1.0}
        response = client.post("/solve-scalar", json=problem)
        assert response.status_code == 200
        body = response.json()
        assert body["subcase"] == "A-1"
        assert body["artifacts"] == []

    def test_solve_stationary(self, client, scalar_document):
        response = client.post("/solve-stationary", json={"problem": scalar_document})
        assert response.status_code == 200
        body = response.json()
        assert body["x_star"] == pytest.approx(1.0, abs=1e-6)
        assert body["u_star"] == pytest.approx(0.0, abs=1e-6)

    def test_riccati(self, client, scheduled_document):
        response = client.post("/riccati", json={"problem": scheduled_document, "dt": 0.01})
        assert response.status_code == 200
        final_X = np.array(response.json()["final_X"])
        assert final_X.shape == (2, 2)
        np.testing.assert_allclose(final_X, final_X.T)

    def test_domain_error_is_unprocessable(self, client, scalar_document):
        response = client.post("/solve-scalar", json={**scalar_document, "A": 0.5})
        assert response.status_code == 422
        assert response.json()["detail"]["error"] == "not_hurwitz"

    def test_dimension_limit(self, client):
        n = 21
        problem = {"A": (-np.eye(n)).tolist(), "B": np.eye(n).tolist(), "alpha": 1.0, "gamma": 1.0}
        response = client.post("/solve-stationary", json={"problem": problem})
        assert response.status_code == 422
        assert response.json()["detail"]["error"] == "dimension_limit"

    def test_malformed_request(self, client):
        response = client.post("/classify", json={"a": -1.0})
        assert response.status_code == 422
