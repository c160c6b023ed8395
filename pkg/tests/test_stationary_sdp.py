"""
Stationary gain design: SDP assembly and solve, rank certificate, gain
reconstruction and the ARE cross-check.
"""
import math

import numpy as np
import pytest

from models.errors import GainBoundViolated, IndefiniteS, InvalidHorizon, MaxIters
from models.problem import validate_system
from numerics.matrix_ops import svec
from numerics.stationary_sdp import (
    alpha_sweep,
    are_plug_in,
    assemble_sdp,
    block_spectrum,
    block_spectrum_to_csv,
    check_rank,
    random_experiment,
    random_system,
    reconstruct_gain,
    riccati_convergence_check,
    scalar_stationary_closed_form,
    solve_sdp,
    solve_sdp_iterate,
    solve_stationary,
    sweep_to_csv,
    verify_stationary,
)

from tests.conftest import A_REF, ALPHA_CASE_A, ALPHA_CASE_B, ALPHA_CASE_C, GAMMA_REF


def _scalar_triples(count=30, seed=77):
    rng = np.random.default_rng(seed)
    triples = []
    for _ in range(count):
        a = -rng.uniform(0.2, 1.5)
        gamma = rng.uniform(0.5, 5.0)
        low = (a + math.sqrt(a * a + gamma)) ** 2 / gamma ** 2
        high = 1.0 / (4.0 * a * a)
        alpha = float(np.exp(rng.uniform(np.log(0.3 * low), np.log(3.0 * high))))
        triples.append((a, alpha, gamma))
    return triples


class TestScalarClosedForm:
    def test_case_a(self):
        assert scalar_stationary_closed_form(A_REF, ALPHA_CASE_A, GAMMA_REF) == pytest.approx((0.840336, 0.0), abs=1e-6)

    def test_case_b(self):
        x, u = scalar_stationary_closed_form(A_REF, ALPHA_CASE_B, GAMMA_REF)
        assert x == pytest.approx(0.689928, abs=1e-6)
        assert u == pytest.approx(0.376023, abs=1e-6)
        # objective x (1 + alpha u) = 2 a alpha + 2 sqrt(alpha)
        assert x * (1 + ALPHA_CASE_B * u) == pytest.approx(0.813416, abs=1e-6)

    def test_case_c(self):
        assert scalar_stationary_closed_form(A_REF, ALPHA_CASE_C, GAMMA_REF) == pytest.approx((0.568626, 1.0), abs=1e-6)


class TestCertificates:
    def test_check_rank_example(self):
        assert check_rank([[1.0]], [[2.0]]) == pytest.approx((3 - math.sqrt(5)) / (3 + math.sqrt(5)))
        assert check_rank([[1.0]], [[2.0]]) == pytest.approx(0.1459, abs=1e-4)

    def test_check_rank_exact_when_y_inverts_x(self):
        X = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert check_rank(X, np.linalg.inv(X)) == pytest.approx(0.0, abs=1e-14)

    def test_block_spectrum_descending(self):
        w = block_spectrum(np.diag([1.0, 3.0]), np.diag([2.0, 1.0]))
        assert np.all(np.diff(w) <= 0)
        assert w.size == 4

    def test_reconstruct_scalar_case_b_gain(self):
        system = validate_system([[A_REF]], [[1.0]])
        Y = np.array([[1.0 / math.sqrt(ALPHA_CASE_B)]])
        C = reconstruct_gain(system, Y, GAMMA_REF)
        assert C[0, 0] == pytest.approx(0.613208, abs=1e-5)
        assert C[0, 0] ** 2 == pytest.approx(0.376023, abs=1e-6)

    def test_reconstruct_rejects_indefinite(self):
        system = validate_system([[-1.0]], [[1.0]])
        with pytest.raises(IndefiniteS):
            reconstruct_gain(system, [[0.5]], 10.0)

    def test_reconstruct_rejects_bound_violation(self):
        system = validate_system([[-0.5]], [[1.0]])
        with pytest.raises(GainBoundViolated):
            reconstruct_gain(system, [[3.0]], 1.0)

    def test_are_plug_in_scalar_case_b(self):
        system = validate_system([[A_REF]], [[1.0]])
        _, u = scalar_stationary_closed_form(A_REF, ALPHA_CASE_B, GAMMA_REF)
        objective, X = are_plug_in(system, [[math.sqrt(u)]], ALPHA_CASE_B)
        assert X[0, 0] == pytest.approx(math.sqrt(ALPHA_CASE_B), rel=1e-10)
        assert objective == pytest.approx(0.813416, abs=1e-6)
        assert verify_stationary(system, [[math.sqrt(u)]], ALPHA_CASE_B) == pytest.approx(objective)


class TestAssembly:
    def test_rejects_bad_weights(self, system_2d):
        with pytest.raises(InvalidHorizon):
            assemble_sdp(system_2d, 0.0, 1.0)

    def test_slack_matches_blocks(self, system_2d):
        instance = assemble_sdp(system_2d, 0.3, 2.0)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(instance.G.shape[1])
        X, Y = instance.split(v)
        S1, S2, S3 = instance.blocks(X, Y)
        expected = np.concatenate([svec(S1), svec(S2), svec(S3)])
        np.testing.assert_allclose(instance.h - instance.G @ v, expected, atol=1e-12)

    def test_objective_matches_linear_form(self, system_2d):
        instance = assemble_sdp(system_2d, 0.3, 2.0)
        v = np.random.default_rng(1).standard_normal(instance.G.shape[1])
        X, Y = instance.split(v)
        assert instance.objective(X, Y) == pytest.approx(instance.q @ v + instance.offset)

    def test_iteration_cap(self, system_2d):
        instance = assemble_sdp(system_2d, 0.3, 2.0)
        with pytest.raises(MaxIters):
            solve_sdp(instance, tol=1e-14, max_iters=5, strict=True)
        _, _, residuals = solve_sdp(instance, tol=1e-14, max_iters=5)
        assert not residuals.converged

    def test_warm_start_resumes_from_the_iterate(self, system_2d):
        instance = assemble_sdp(system_2d, 0.3, 2.0)
        cold, cold_residuals = solve_sdp_iterate(instance, tol=1e-9)
        assert cold_residuals.converged
        warm, warm_residuals = solve_sdp_iterate(instance, tol=1e-9, warm_start=cold)
        assert warm_residuals.converged
        assert warm_residuals.iterations < cold_residuals.iterations
        np.testing.assert_allclose(warm.v, cold.v, atol=1e-6)

    def test_badly_scaled_system_converges(self):
        system = validate_system([[-0.01, 0.0], [0.0, -50.0]], [[0.1, 0.0], [0.0, 10.0]])
        solution = solve_stationary(system, 0.1, 10.0)
        assert solution.residuals.converged
        assert solution.rank_gap <= 1e-6
        assert solution.certified


class TestScalarStationary:
    @pytest.mark.parametrize("alpha", [ALPHA_CASE_A, ALPHA_CASE_B, ALPHA_CASE_C])
    def test_reference_cases(self, alpha):
        system = validate_system([[A_REF]], [[1.0]])
        solution = solve_stationary(system, alpha, GAMMA_REF)
        x, u = scalar_stationary_closed_form(A_REF, alpha, GAMMA_REF)
        doc = solution.to_dict()
        assert doc["x_star"] == pytest.approx(x, abs=1e-7)
        assert doc["u_star"] == pytest.approx(u, abs=1e-7)
        assert solution.X[0, 0] * solution.Y[0, 0] == pytest.approx(1.0, abs=1e-8)
        assert solution.certified

    def test_case_a_document(self):
        system = validate_system([[-0.5]], [[1.0]])
        doc = solve_stationary(system, 2.0, 100.0).to_dict()
        assert doc["x_star"] == pytest.approx(1.0, abs=1e-6)
        assert doc["u_star"] == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("a, alpha, gamma", _scalar_triples())
    def test_matches_closed_form(self, a, alpha, gamma):
        system = validate_system([[a]], [[1.0]])
        solution = solve_stationary(system, alpha, gamma)
        x, u = scalar_stationary_closed_form(a, alpha, gamma)
        assert solution.X[0, 0] == pytest.approx(x, abs=1e-7)
        assert solution.u_matrix[0, 0] == pytest.approx(u, abs=1e-7 * max(1.0, gamma))
        assert solution.X[0, 0] * solution.Y[0, 0] == pytest.approx(1.0, abs=1e-8)


class TestMatrixStationary:
    def test_two_state_system(self, system_2d):
        solution = solve_stationary(system_2d, 0.1, 5.0)
        assert solution.rank_gap <= 1e-6
        assert solution.relative_mismatch <= 1e-6
        assert np.linalg.eigvalsh(solution.u_matrix)[-1] <= 5.0 * (1 + 1e-6)
        assert min(solution.lmi_margins) >= -1e-6
        assert solution.certified

    def test_riccati_flow_converges_to_are(self, system_2d):
        solution = solve_stationary(system_2d, 0.1, 5.0)
        distance, _, X_are = riccati_convergence_check(system_2d, solution.C)
        assert distance <= 1e-6 * max(1.0, np.linalg.norm(X_are))

    def test_random_system_is_stable_with_orthogonal_b(self):
        rng = np.random.default_rng([3, 0])
        system = random_system(5, rng)
        assert system.spectral_abscissa <= -0.1 + 1e-9
        np.testing.assert_allclose(system.B @ system.B.T, np.eye(5), atol=1e-12)

    def test_experiment_is_reproducible(self):
        first = random_experiment(2, 0.1, 10.0, trials=3, seed=9)
        second = random_experiment(2, 0.1, 10.0, trials=3, seed=9, max_workers=3)
        assert first.to_dict() == second.to_dict()

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [2, 4])
    @pytest.mark.parametrize("alpha", [0.01, 0.1, 1.0])
    @pytest.mark.parametrize("gamma", [1.0, 100.0])
    def test_random_systems_are_rank_exact(self, n, alpha, gamma):
        summary = random_experiment(n, alpha, gamma, trials=3, seed=n)
        assert summary.succeeded == 3
        for trial in summary.trials:
            assert trial.certified
            assert trial.rank_gap <= 1e-6
            assert trial.relative_mismatch <= 1e-6
            assert trial.gain_eigenvalues[-1] <= gamma + 1e-6 * max(1.0, gamma)

    @pytest.mark.slow
    def test_fifteen_state_experiment(self):
        summary = random_experiment(15, 0.01, 100.0, trials=10, seed=1)
        assert summary.succeeded == 10
        assert summary.rank_exact_count == 10

    @pytest.mark.slow
    def test_hundred_fifteen_state_trials_are_rank_exact(self):
        summary = random_experiment(15, 0.01, 100.0, trials=100, seed=1)
        doc = summary.to_dict()
        assert doc["succeeded"] == 100
        assert doc["rank_exact"] == 100
        assert doc["max_rank_gap"] <= 1e-6


class TestSweep:
    def test_information_rate_falls_with_alpha(self, system_2d, tmp_path):
        points = alpha_sweep(system_2d, [0.01, 0.1, 1.0], 5.0)
        rates = [p.mi_rate for p in points]
        assert all(b <= a + 1e-6 for a, b in zip(rates, rates[1:]))
        assert all(np.all(p.gain_eigenvalues >= -1e-9) for p in points)
        lines = sweep_to_csv(points, tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "alpha,index,eigenvalue"
        assert len(lines) == 1 + 3 * 2

    def test_warm_started_sweep_matches_cold_solves(self, system_2d):
        alphas = [0.05, 0.1, 0.2]
        points = alpha_sweep(system_2d, alphas, 5.0)
        for alpha, point in zip(alphas, points):
            cold = solve_stationary(system_2d, alpha, 5.0)
            assert point.certified
            assert point.objective == pytest.approx(cold.are_objective, rel=1e-5)

    def test_block_spectrum_csv(self, tmp_path):
        lines = block_spectrum_to_csv([[1.0]], [[2.0]], tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "index,eigenvalue"
        assert lines[1].startswith("0,")


def test_matches_an_independent_conic_solver(system_2d):
    cp = pytest.importorskip("cvxpy")
    n = system_2d.n
    A, B = system_2d.A, system_2d.B
    alpha, gamma = 0.1, 5.0
    X = cp.Variable((n, n), symmetric=True)
    Y = cp.Variable((n, n), symmetric=True)
    eye = np.eye(n)
    S1 = cp.Variable((n, n), symmetric=True)
    S2 = cp.Variable((2 * n, 2 * n), symmetric=True)
    S3 = cp.Variable((2 * n, 2 * n), symmetric=True)
    constraints = [
        S1 == A @ X + X @ A.T + B @ B.T,
        S2 == -cp.bmat([[Y @ A + A.T @ Y - gamma * eye, Y @ B], [B.T @ Y, -eye]]),
        S3 == cp.bmat([[X, eye], [eye, Y]]),
        S1 >> 0,
        S2 >> 0,
        S3 >> 0,
    ]
    objective = cp.Minimize(cp.trace(X) + alpha * cp.trace(B.T @ Y @ B) + 2 * alpha * np.trace(A))
    reference = cp.Problem(objective, constraints).solve()
    solution = solve_stationary(system_2d, alpha, gamma)
    assert solution.objective_value == pytest.approx(reference, rel=1e-3)
