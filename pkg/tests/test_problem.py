"""
Problem data validation and gain schedules.
"""
import numpy as np
import pytest

from models.errors import (
    DimensionMismatch,
    InvalidHorizon,
    InvalidSchedule,
    InvalidSystem,
    KbGainError,
    NotHurwitz,
    SingularB,
)
from models.problem import ChannelSchedule, GainSchedule, gain_to_u, validate_horizon, validate_system


class TestValidateSystem:
    def test_accepts_stable_pair(self):
        system = validate_system([[-1.0, 2.0], [0.0, -3.0]], np.eye(2))
        assert system.n == 2
        assert system.spectral_abscissa == pytest.approx(-1.0)
        np.testing.assert_allclose(system.BBt, np.eye(2))

    def test_scalar_numbers_become_matrices(self):
        system = validate_system(-0.5, 1.0)
        assert system.A.shape == (1, 1)

    def test_rejects_unstable_drift(self):
        with pytest.raises(NotHurwitz) as exc:
            validate_system([[0.1]], [[1.0]])
        assert exc.value.details["max_real_eigenvalue"] == pytest.approx(0.1)

    def test_rejects_marginal_drift(self):
        with pytest.raises(NotHurwitz):
            validate_system([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))

    def test_rejects_singular_diffusion(self):
        with pytest.raises(SingularB):
            validate_system(-np.eye(2), [[1.0, 1.0], [1.0, 1.0]])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate_system(-np.eye(2), np.eye(3))

    @pytest.mark.parametrize("A, B, culprit", [
        ([[np.nan]], [[1.0]], "A"),
        ([[-1.0, 0.0], [np.inf, -1.0]], np.eye(2), "A"),
        (-np.eye(2), [[1.0, 0.0], [0.0, -np.inf]], "B"),
    ])
    def test_rejects_non_finite_entries(self, A, B, culprit):
        with pytest.raises(InvalidSystem) as exc:
            validate_system(A, B)
        assert exc.value.code == "invalid_system"
        assert exc.value.details == {"matrix": culprit, "non_finite": 1}

    def test_matrices_are_read_only(self):
        system = validate_system(-np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            system.A[0, 0] = 1.0


class TestValidateHorizon:
    def test_valid(self):
        system = validate_system(-np.eye(2), np.eye(2))
        horizon = validate_horizon(system, 0.0, 3.0, np.eye(2), 0.5, 2.0)
        assert horizon.length == pytest.approx(3.0)

    @pytest.mark.parametrize("t0, t1, alpha, gamma", [
        (1.0, 1.0, 0.5, 1.0),
        (0.0, 1.0, 0.0, 1.0),
        (0.0, 1.0, 0.5, -1.0),
        (0.0, np.inf, 0.5, 1.0),
        (0.0, 1.0, np.inf, 1.0),
        (0.0, 1.0, 0.5, np.nan),
    ])
    def test_invalid_values(self, t0, t1, alpha, gamma):
        system = validate_system(-np.eye(1), np.eye(1))
        with pytest.raises(InvalidHorizon):
            validate_horizon(system, t0, t1, [[1.0]], alpha, gamma)

    def test_indefinite_initial_covariance(self):
        system = validate_system(-np.eye(2), np.eye(2))
        with pytest.raises(InvalidHorizon):
            validate_horizon(system, 0.0, 1.0, np.diag([1.0, -1.0]), 0.5, 1.0)

    def test_non_finite_initial_covariance(self):
        system = validate_system(-np.eye(1), np.eye(1))
        with pytest.raises(InvalidHorizon):
            validate_horizon(system, 0.0, 1.0, [[np.nan]], 0.5, 1.0)

    def test_wrong_initial_covariance_shape(self):
        system = validate_system(-np.eye(2), np.eye(2))
        with pytest.raises(DimensionMismatch):
            validate_horizon(system, 0.0, 1.0, np.eye(3), 0.5, 1.0)


class TestGainSchedule:
    def test_value_at_is_right_continuous(self):
        schedule = GainSchedule.scalar([0.0, 1.0, 2.0], [0.0, 3.0])
        assert schedule.value_at(0.5)[0, 0] == 0.0
        assert schedule.value_at(1.0)[0, 0] == 3.0
        assert schedule.value_at(2.0)[0, 0] == 3.0

    def test_value_outside_horizon(self):
        schedule = GainSchedule.scalar([0.0, 1.0], [1.0])
        with pytest.raises(InvalidSchedule):
            schedule.value_at(1.5)

    def test_rejects_non_increasing_breakpoints(self):
        with pytest.raises(InvalidSchedule):
            GainSchedule.scalar([0.0, 1.0, 1.0], [1.0, 2.0])

    def test_rejects_value_count_mismatch(self):
        with pytest.raises(InvalidSchedule):
            GainSchedule.scalar([0.0, 1.0, 2.0], [1.0])

    def test_rejects_negative_values(self):
        with pytest.raises(InvalidSchedule):
            GainSchedule.scalar([0.0, 1.0], [-1.0])

    @pytest.mark.parametrize("breakpoints, values", [([0.0, 1.0], [np.nan]), ([0.0, np.inf], [1.0])])
    def test_rejects_non_finite_data(self, breakpoints, values):
        with pytest.raises(InvalidSchedule):
            GainSchedule.scalar(breakpoints, values)

    def test_bound_check(self):
        schedule = GainSchedule.constant(0.0, 1.0, np.diag([1.0, 3.0]))
        schedule.check_bounds(3.0)
        with pytest.raises(InvalidSchedule):
            schedule.check_bounds(2.0)

    def test_switch_times_ignore_repeated_values(self):
        schedule = GainSchedule.scalar([0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 0.0])
        assert schedule.switch_times == [2.0]

    def test_merged(self):
        schedule = GainSchedule.scalar([0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 0.0]).merged()
        assert schedule.breakpoints == (0.0, 2.0, 3.0)
        assert schedule.scalar_values() == [1.0, 0.0]

    def test_from_gains(self):
        C = np.array([[1.0, 2.0]])
        schedule = GainSchedule.from_gains([0.0, 1.0], [C])
        np.testing.assert_allclose(schedule.values[0], C.T @ C)

    def test_channel_schedule_round_trip_to_controls(self):
        C = np.array([[1.0, 0.0], [1.0, 1.0]])
        channel = ChannelSchedule.constant(0.0, 1.0, C)
        np.testing.assert_allclose(channel.to_gain_schedule().values[0], C.T @ C)


def test_gain_to_u_is_symmetric_psd():
    rng = np.random.default_rng(3)
    C = rng.standard_normal((3, 4))
    U = gain_to_u(C)
    assert np.array_equal(U, U.T)
    assert np.linalg.eigvalsh(U)[0] >= -1e-12


def test_errors_serialize():
    error = NotHurwitz("A is not Hurwitz", {"max_real_eigenvalue": 0.1})
    assert isinstance(error, KbGainError)
    assert error.to_dict() == {
        "error": "not_hurwitz",
        "message": "A is not Hurwitz",
        "details": {"max_real_eigenvalue": 0.1},
    }
