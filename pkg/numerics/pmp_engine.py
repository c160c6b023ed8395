"""
Minimum-principle checker for candidate gain schedules.

The state X is integrated forward by the Riccati flow, the costate P
backward from P(t1) = 0 on the same grid, and the pointwise Hamiltonian gap
Tr(M U) - min_{0 <= U <= gamma I} Tr(M U), M = alpha X - X P X, is reported.
A zero gap everywhere is necessary for optimality. This module checks
schedules; it does not synthesize them.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from config import settings
from models.errors import AsymmetricInput
from models.problem import GainSchedule, HorizonSpec, LtiSystem
from numerics.matrix_ops import sym, sym_eig
from numerics.riccati_flow import RiccatiTrajectory, integrate_riccati, riccati_rhs

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PmpCertificate:
    """Costate path and Hamiltonian-gap profile of a candidate schedule."""
    times: np.ndarray
    X: np.ndarray
    P: np.ndarray
    gap: np.ndarray
    max_gap: float
    trajectory: RiccatiTrajectory


def _singular_band(M: np.ndarray) -> float:
    return settings.SINGULAR_BAND * max(1.0, float(np.linalg.norm(M, 'fro')))


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise AsymmetricInput("M must be a square matrix", {"shape": list(M.shape)})
    asym = float(np.linalg.norm(M - M.T, 'fro'))
    if asym > 1e-9 * max(1.0, float(np.linalg.norm(M, 'fro'))):
        raise AsymmetricInput("M must be symmetric", {"asymmetry": asym})
    return sym(M)


def hamiltonian_argmin(M, gamma: float) -> np.ndarray:
    """
    Exact minimizer of Tr(M U) over {0 <= U <= gamma I}.

    Eigen-directions of M with eigenvalue below -eps get gamma, all others 0
    (the band [-eps, eps] is treated as a singular arc and assigned 0).

    Args:
        M: Symmetric matrix
        gamma: Gain bound

    Returns:
        U* = gamma Q_- Q_-^T
    """
    M = _check_symmetric(M)
    eig = sym_eig(M)
    negative = eig.eigenvalues < -_singular_band(M)
    Q = eig.eigenvectors[:, negative]
    return sym(gamma * (Q @ Q.T))


def hamiltonian_min(M, gamma: float) -> float:
    """Minimum value of Tr(M U) over the admissible set."""
    M = _check_symmetric(M)
    w = sym_eig(M).eigenvalues
    return float(gamma * w[w < -_singular_band(M)].sum())


def _hermite_mid(X0: np.ndarray, X1: np.ndarray, dX0: np.ndarray, dX1: np.ndarray, h: float) -> np.ndarray:
    """Cubic Hermite interpolant at the midpoint of a step."""
    return 0.5 * (X0 + X1) + 0.125 * h * (dX0 - dX1)


def _costate_rhs(A: np.ndarray, alpha: float, X: np.ndarray, P: np.ndarray, U: np.ndarray) -> np.ndarray:
    """P' = P X U + U X P - P A - A^T P - I - alpha U."""
    PXU = P @ X @ U
    return PXU + PXU.T - P @ A - A.T @ P - np.eye(A.shape[0]) - alpha * U


def integrate_canonical(
    system: LtiSystem,
    horizon: HorizonSpec,
    schedule: GainSchedule,
    dt: Optional[float] = None,
) -> PmpCertificate:
    """
    Integrate the canonical equations for a candidate schedule and compute
    its Hamiltonian-gap profile.

    Args:
        system: Source model
        horizon: Horizon, weights and initial covariance
        schedule: Candidate control
        dt: Target step (default (t1 - t0) / 4096)

    Returns:
        PmpCertificate
    """
    trajectory = integrate_riccati(system, horizon, schedule, dt)
    A = system.A
    BBt = system.BBt
    alpha = horizon.alpha
    gamma = horizon.gamma
    times = trajectory.times
    X = trajectory.X
    steps = trajectory.grid.step_segment

    P = np.empty_like(X)
    P[-1] = 0.0
    for k in range(steps.size - 1, -1, -1):
        U = schedule.values[steps[k]]
        h = times[k + 1] - times[k]
        X_hi = X[k + 1]
        X_lo = X[k]
        X_mid = _hermite_mid(X_lo, X_hi, riccati_rhs(A, BBt, X_lo, U), riccati_rhs(A, BBt, X_hi, U), h)

        P_hi = P[k + 1]
        k1 = _costate_rhs(A, alpha, X_hi, P_hi, U)
        k2 = _costate_rhs(A, alpha, X_mid, P_hi - 0.5 * h * k1, U)
        k3 = _costate_rhs(A, alpha, X_mid, P_hi - 0.5 * h * k2, U)
        k4 = _costate_rhs(A, alpha, X_lo, P_hi - h * k3, U)
        P[k] = sym(P_hi - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))

    U_nodes = trajectory.node_controls()
    gap = np.empty(times.size)
    for k in range(times.size):
        M = sym(alpha * X[k] - X[k] @ P[k] @ X[k])
        gap[k] = float(np.trace(M @ U_nodes[k])) - hamiltonian_min(M, gamma)

    P.setflags(write=False)
    gap.setflags(write=False)
    max_gap = float(gap.max())
    logger.debug(f"🧭 Canonical sweep done: max Hamiltonian gap {max_gap:.3e}")
    return PmpCertificate(times=times, X=X, P=P, gap=gap, max_gap=max_gap, trajectory=trajectory)


def pmp_residual(certificate: PmpCertificate) -> float:
    """Largest pointwise Hamiltonian gap (zero is necessary for optimality)."""
    if certificate.gap.size == 0:
        return 0.0
    return float(np.max(certificate.gap))


def scalar_sign_profile(certificate: PmpCertificate, alpha: float) -> List[str]:
    """
    Classify each grid point of a scalar certificate by the sign of x p - alpha:
    "0" below the switching surface, "gamma" above it, "singular" on it.
    """
    labels = []
    for x, p in zip(certificate.X[:, 0, 0], certificate.P[:, 0, 0]):
        M = x * (alpha - x * p)
        band = _singular_band(np.array([[M]]))
        if M > band:
            labels.append("0")
        elif M < -band:
            labels.append("gamma")
        else:
            labels.append("singular")
    return labels


def gap_to_csv(certificate: PmpCertificate, path: Union[str, Path]) -> Path:
    """Write the gap profile as CSV (t, g)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(["t", "gap"])
        for t, g in zip(certificate.times, certificate.gap):
            writer.writerow([format(t, '.17g'), format(g, '.17g')])
    return path
