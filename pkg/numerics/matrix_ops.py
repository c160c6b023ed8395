"""
Dense symmetric linear algebra used throughout the toolkit: symmetric
eigendecomposition, PSD projection, symmetric square root, Lyapunov solves
and the algebraic Riccati equation of the stationary filter.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from config import settings
from models.errors import (
    DimensionMismatch,
    IndefiniteInput,
    LyapunovFailure,
    NoConvergence,
    ResonantSpectrum,
)
from models.problem import LtiSystem

logger = logging.getLogger(__name__)


def sym(M: np.ndarray) -> np.ndarray:
    """Symmetric part (M + M^T) / 2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


@dataclass(frozen=True, eq=False)
class SymEig:
    """Eigendecomposition M = Q diag(eigenvalues) Q^T, eigenvalues ascending."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return sym((Q * self.eigenvalues) @ Q.T)


def sym_eig(M: np.ndarray) -> SymEig:
    """Symmetric eigendecomposition of the symmetric part of M."""
    w, Q = np.linalg.eigh(sym(M))
    return SymEig(eigenvalues=w, eigenvectors=Q)


def _require_square(name: str, M: np.ndarray) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square", {f"{name}_shape": list(M.shape)})


def solve_lyapunov(F, Q) -> np.ndarray:
    """
    Solve F X + X F^T + Q = 0 by Kronecker vectorization.

    Args:
        F: n x n matrix with lambda_i(F) + lambda_j(F) != 0
        Q: n x n symmetric matrix

    Returns:
        Symmetric solution X
    """
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    _require_square("F", F)
    if Q.shape != F.shape:
        raise DimensionMismatch("F and Q must have the same shape", {"F_shape": list(F.shape), "Q_shape": list(Q.shape)})

    n = F.shape[0]
    eye = np.eye(n)
    # column-major vec: vec(F X) = (I kron F) vec X, vec(X F^T) = (F kron I) vec X
    K = np.kron(eye, F) + np.kron(F, eye)
    try:
        x = np.linalg.solve(K, -Q.reshape(-1, order='F'))
    except np.linalg.LinAlgError as e:
        raise ResonantSpectrum(f"Lyapunov operator is singular: {e}")
    X = sym(x.reshape(n, n, order='F'))

    residual = np.linalg.norm(F @ X + X @ F.T + Q, 'fro')
    scale = np.linalg.norm(F, 'fro') * np.linalg.norm(X, 'fro') + np.linalg.norm(Q, 'fro')
    if not np.isfinite(residual) or residual > 1e-9 * max(scale, 1e-300):
        raise ResonantSpectrum(
            "Lyapunov solve is inaccurate (near-resonant spectrum)",
            {"residual": float(residual), "scale": float(scale)},
        )
    return X


def are_residual(system: LtiSystem, C, X) -> float:
    """Frobenius residual of A X + X A^T - X C^T C X + B B^T."""
    C = np.asarray(C, dtype=float)
    A = system.A
    R = A @ X + X @ A.T - X @ C.T @ C @ X + system.BBt
    return float(np.linalg.norm(R, 'fro'))


def solve_are(system: LtiSystem, C) -> np.ndarray:
    """
    Solve the filter algebraic Riccati equation
    A X + X A^T - X C^T C X + B B^T = 0 by Newton-Kleinman from L0 = 0.

    Args:
        system: Validated system (A Hurwitz, so L0 = 0 is stabilizing)
        C: Channel gain with n columns

    Returns:
        The unique positive definite solution X
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 0:
        C = C.reshape(1, 1)
    n = system.n
    if C.ndim != 2 or C.shape[1] != n:
        raise DimensionMismatch("C must have n columns", {"C_shape": list(C.shape), "n": n})

    A = system.A
    BBt = system.BBt
    L = np.zeros((n, C.shape[0]))
    X = None
    for iteration in range(1, settings.ARE_MAX_ITERS + 1):
        F = A - L @ C
        try:
            X_next = solve_lyapunov(F, L @ L.T + BBt)
        except ResonantSpectrum as e:
            raise LyapunovFailure(f"Newton-Kleinman step {iteration} failed: {e.message}", e.details)
        if X is not None:
            step = np.linalg.norm(X_next - X, 'fro')
            if step <= settings.ARE_REL_TOL * np.linalg.norm(X, 'fro'):
                logger.debug(f"🔁 Newton-Kleinman converged in {iteration} iterations")
                return X_next
        X = X_next
        L = X @ C.T

    raise NoConvergence(
        f"Newton-Kleinman did not converge in {settings.ARE_MAX_ITERS} iterations",
        {"residual": are_residual(system, C, X)},
    )


def psd_project(M) -> np.ndarray:
    """Frobenius-nearest PSD matrix (eigenvalue clipping at zero)."""
    eig = sym_eig(M)
    w = np.clip(eig.eigenvalues, 0.0, None)
    Q = eig.eigenvectors
    return sym((Q * w) @ Q.T)


def sym_sqrt(M) -> np.ndarray:
    """
    Symmetric PSD square root S with S^T S = M.
    Eigenvalues in [-eps_clip, 0) are treated as zero.
    """
    M = np.asarray(M, dtype=float)
    _require_square("M", M)
    eig = sym_eig(M)
    clip = settings.SQRT_CLIP_TOL * np.linalg.norm(M, 'fro')
    if eig.eigenvalues.size and eig.eigenvalues[0] < -clip:
        raise IndefiniteInput(
            "matrix is not positive semidefinite",
            {"min_eigenvalue": float(eig.eigenvalues[0]), "clip": float(clip)},
        )
    root = np.sqrt(np.clip(eig.eigenvalues, 0.0, None))
    Q = eig.eigenvectors
    return sym((Q * root) @ Q.T)


@lru_cache(maxsize=64)
def _svec_pattern(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper-triangle indices of an n x n matrix and the sqrt(2) off-diagonal weights."""
    rows, cols = np.triu_indices(n)
    weight = np.where(rows == cols, 1.0, np.sqrt(2.0))
    for arr in (rows, cols, weight):
        arr.setflags(write=False)
    return rows, cols, weight


def svec(M: np.ndarray) -> np.ndarray:
    """Symmetric vectorization (upper triangle, off-diagonals scaled by sqrt 2)."""
    rows, cols, weight = _svec_pattern(M.shape[0])
    return M[rows, cols] * weight


def smat(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of svec."""
    rows, cols, weight = _svec_pattern(n)
    entries = v / weight
    M = np.empty((n, n))
    M[rows, cols] = entries
    M[cols, rows] = entries
    return M
