"""
Shared fixtures and reference instances for the test suite.
"""
import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest

from models.problem import validate_horizon, validate_system
from numerics.scalar_analytic import ScalarProblem

# ── Reference scalar source: a = -0.595, gamma = 1 ───────────────────────────
A_REF = -0.595
GAMMA_REF = 1.0
ALPHA_CASE_A = 0.926
ALPHA_CASE_B = 0.476
ALPHA_CASE_C = 0.173


def scalar_problem(alpha: float, x0: float, t1: float, a: float = A_REF, gamma: float = GAMMA_REF) -> ScalarProblem:
    return ScalarProblem(a=a, alpha=alpha, gamma=gamma, x0=x0, t0=0.0, t1=t1)


@pytest.fixture
def scalar_system():
    return validate_system([[A_REF]], [[1.0]])


@pytest.fixture
def system_2d():
    A = np.array([[-1.0, 0.5], [0.0, -2.0]])
    B = np.array([[1.0, 0.0], [0.3, 0.8]])
    return validate_system(A, B)


@pytest.fixture
def horizon_2d(system_2d):
    return validate_horizon(system_2d, 0.0, 2.0, 0.5 * np.eye(2), alpha=0.1, gamma=5.0)


@pytest.fixture
def scalar_document():
    """Problem document of a Case A scalar source (stationary optimum x = 1, u = 0)."""
    return {"A": -0.5, "B": 1.0, "X0": 1.0, "t0": 0.0, "t1": 1.0, "alpha": 2.0, "gamma": 100.0}


@pytest.fixture
def scheduled_document():
    return {
        "A": [[-1.0, 0.5], [0.0, -2.0]],
        "B": [[1.0, 0.0], [0.3, 0.8]],
        "X0": 0.5,
        "t0": 0.0,
        "t1": 1.0,
        "alpha": 0.1,
        "gamma": 5.0,
        "schedule": {"breakpoints": [0.0, 0.4, 1.0], "values": [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 0.0]]]},
    }
