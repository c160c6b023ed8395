"""
Infinite-horizon time-invariant gain design through the rank-relaxed SDP

    minimize    Tr(X) + alpha Tr(B^T Y B) + 2 alpha Tr(A)
    subject to  A X + X A^T + B B^T >= 0
                [[Y A + A^T Y - gamma I, Y B], [B^T Y, -I]] <= 0
                [[X, I], [I, Y]] >= 0

solved by a first-order splitting method, followed by the rank certificate,
gain reconstruction C^T C = Y A + A^T Y + Y B B^T Y and the ARE plug-in check.
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from config import settings
from models.errors import (
    GainBoundViolated,
    IndefiniteS,
    InfeasibleDetected,
    InvalidHorizon,
    KbGainError,
    MaxIters,
)
from models.problem import GainSchedule, LtiSystem, validate_horizon, validate_system
from numerics.matrix_ops import psd_project, smat, solve_are, svec, sym, sym_eig, sym_sqrt
from numerics.riccati_flow import integrate_riccati
from numerics.scalar_analytic import case_thresholds

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SdpInstance:
    """
    Conic standard form: minimize q^T v + offset subject to h - G v in K,
    with v = [svec(X); svec(Y)] and K the product of PSD cones of sizes
    (n, 2n, 2n) in svec coordinates.
    """
    system: LtiSystem
    alpha: float
    gamma: float
    G: np.ndarray
    h: np.ndarray
    q: np.ndarray
    offset: float
    block_sizes: Tuple[int, int, int]

    @property
    def n(self) -> int:
        return self.system.n

    def split(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(X, Y) from a variable vector."""
        m = self.n * (self.n + 1) // 2
        return smat(v[:m], self.n), smat(v[m:], self.n)

    def blocks(self, X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The three constraint matrices, each required to be PSD."""
        A = self.system.A
        B = self.system.B
        n = self.n
        eye = np.eye(n)
        S1 = A @ X + X @ A.T + self.system.BBt
        S2 = -np.block([[Y @ A + A.T @ Y - self.gamma * eye, Y @ B], [B.T @ Y, -eye]])
        S3 = np.block([[X, eye], [eye, Y]])
        return sym(S1), sym(S2), sym(S3)

    def objective(self, X: np.ndarray, Y: np.ndarray) -> float:
        return float(np.trace(X) + self.alpha * np.trace(self.system.B.T @ Y @ self.system.B) + self.offset)


def _svec_sizes(block_sizes: Sequence[int]) -> List[int]:
    return [k * (k + 1) // 2 for k in block_sizes]


def assemble_sdp(system: LtiSystem, alpha: float, gamma: float) -> SdpInstance:
    """
    Encode the relaxed SDP in conic standard form.

    Args:
        system: Validated system
        alpha: Trade-off weight (> 0)
        gamma: Gain bound (> 0)

    Returns:
        SdpInstance
    """
    if not 0 < alpha < np.inf or not 0 < gamma < np.inf:
        raise InvalidHorizon("alpha and gamma must be positive and finite", {"alpha": alpha, "gamma": gamma})
    n = system.n
    A = system.A
    B = system.B
    m = n * (n + 1) // 2
    eye = np.eye(n)
    zero = np.zeros((n, n))

    def linear_part(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        # affine slack blocks minus their constant terms
        S1 = A @ X + X @ A.T
        S2 = -np.block([[Y @ A + A.T @ Y, Y @ B], [B.T @ Y, zero]])
        S3 = np.block([[X, zero], [zero, Y]])
        return np.concatenate([svec(sym(S1)), svec(sym(S2)), svec(sym(S3))])

    G = np.empty((sum(_svec_sizes((n, 2 * n, 2 * n))), 2 * m))
    basis = np.eye(2 * m)
    for j in range(2 * m):
        G[:, j] = -linear_part(smat(basis[j, :m], n), smat(basis[j, m:], n))

    h = np.concatenate([
        svec(system.BBt),
        svec(np.block([[gamma * eye, zero], [zero, eye]])),
        svec(np.block([[zero, eye], [eye, zero]])),
    ])
    q = np.concatenate([svec(eye), alpha * svec(system.BBt)])
    offset = 2.0 * alpha * float(np.trace(A))
    return SdpInstance(
        system=system,
        alpha=float(alpha),
        gamma=float(gamma),
        G=G,
        h=h,
        q=q,
        offset=offset,
        block_sizes=(n, 2 * n, 2 * n),
    )


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdpResiduals:
    primal: float
    dual: float
    gap: float
    iterations: int
    converged: bool
    rho: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "primal": self.primal,
            "dual": self.dual,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "rho": self.rho,
        }


@dataclass(frozen=True, eq=False)
class SdpIterate:
    """Primal variable v, slack s and dual y of a solver run, in the instance's own units."""
    v: np.ndarray
    s: np.ndarray
    y: np.ndarray


def _block_bounds(block_sizes: Sequence[int]) -> List[Tuple[int, int]]:
    bounds = []
    start = 0
    for size in _svec_sizes(block_sizes):
        bounds.append((start, start + size))
        start += size
    return bounds


def _project_cone(s: np.ndarray, block_sizes: Sequence[int]) -> np.ndarray:
    out = np.empty_like(s)
    for k, (start, end) in zip(block_sizes, _block_bounds(block_sizes)):
        out[start:end] = svec(psd_project(smat(s[start:end], k)))
    return out


def _equilibrate(G: np.ndarray, block_sizes: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ruiz-style scaling of G: one factor per variable (D) and one factor per
    cone block (E), so E G D has rows and columns of comparable norm. A
    single factor per block keeps every PSD cone invariant.

    Returns:
        Tuple of (D, E)
    """
    lo, hi = settings.SDP_SCALE_BOUNDS
    bounds = _block_bounds(block_sizes)
    D = np.ones(G.shape[1])
    E = np.ones(G.shape[0])
    scaled = G.copy()
    for _ in range(settings.SDP_SCALING_PASSES):
        d = 1.0 / np.sqrt(np.clip(np.linalg.norm(scaled, axis=0), lo, hi))
        row_norms = np.linalg.norm(scaled, axis=1)
        e = np.empty(G.shape[0])
        for start, end in bounds:
            e[start:end] = 1.0 / math.sqrt(min(max(float(row_norms[start:end].mean()), lo), hi))
        scaled = e[:, None] * scaled * d[None, :]
        D *= d
        E *= e
    return D, E


def solve_sdp_iterate(
    instance: SdpInstance,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    strict: bool = False,
    warm_start: Optional[SdpIterate] = None,
) -> Tuple[SdpIterate, SdpResiduals]:
    """
    ADMM on  min q^T v  s.t.  G v + s = h,  s in K, on the equilibrated data.

    The v-update solves the normal equations with a Cholesky factor computed
    once (rho only scales the right-hand side); the s-update projects each
    block onto the PSD cone. rho is rebalanced from the normalized primal and
    dual residuals. Stops when the relative primal residual, dual residual and
    duality gap, measured in the unscaled problem, are all below tol.

    Args:
        instance: Assembled SDP
        tol: Stopping tolerance (default from settings)
        max_iters: Iteration cap (default from settings)
        strict: Raise MaxIters instead of returning the best iterate
        warm_start: Iterate of an earlier run on the same G and h

    Returns:
        Tuple of (iterate, residuals)
    """
    tol = settings.SDP_TOL if tol is None else tol
    max_iters = settings.SDP_MAX_ITERS if max_iters is None else max_iters
    relax = settings.SDP_RELAXATION
    check_every = settings.SDP_CHECK_EVERY
    rho_min, rho_max = settings.SDP_RHO_BOUNDS
    blocks = instance.block_sizes

    D, E = _equilibrate(instance.G, blocks)
    G = E[:, None] * instance.G * D[None, :]
    h = E * instance.h
    q = D * instance.q
    factor = cho_factor(G.T @ G)
    h_norm = 1.0 + float(np.linalg.norm(instance.h))
    q_norm = 1.0 + float(np.linalg.norm(instance.q))
    explode = 1e12 * (1.0 + float(np.linalg.norm(h)))

    rho = settings.SDP_RHO_INIT
    if warm_start is None:
        v = np.zeros(G.shape[1])
        s = _project_cone(h, blocks)
        u = np.zeros_like(h)
    else:
        v = warm_start.v / D
        s = _project_cone(E * warm_start.s, blocks)
        u = warm_start.y / E / rho
    best = None
    best_score = math.inf
    residuals = None

    for iteration in range(1, max_iters + 1):
        v = cho_solve(factor, -q / rho - G.T @ (s - h + u))
        Gv = G @ v
        Gv_relaxed = relax * Gv - (1.0 - relax) * (s - h)
        s = _project_cone(h - Gv_relaxed - u, blocks)
        u = u + Gv_relaxed + s - h
        if iteration % check_every and iteration != max_iters:
            continue

        y = rho * u
        r_primal = Gv + s - h
        Gty = G.T @ y
        r_dual = q + Gty
        primal = float(np.linalg.norm(r_primal / E)) / h_norm
        dual = float(np.linalg.norm(r_dual / D)) / q_norm
        p_obj = float(q @ v)
        d_obj = -float(h @ y)
        gap = abs(p_obj - d_obj) / (1.0 + abs(p_obj) + abs(d_obj))

        score = max(primal, dual, gap)
        if score < best_score:
            best_score = score
            best = (
                SdpIterate(v=D * v, s=s / E, y=E * y),
                SdpResiduals(primal, dual, gap, iteration, False, rho),
            )

        if score <= tol:
            residuals = SdpResiduals(primal, dual, gap, iteration, True, rho)
            logger.debug(f"✅ SDP converged in {iteration} iterations (gap {gap:.2e})")
            break

        if not np.isfinite(score) or float(np.linalg.norm(u)) > explode / rho:
            raise InfeasibleDetected(
                "dual iterates diverged; the instance looks infeasible",
                {"iteration": iteration, "dual_norm": float(np.linalg.norm(E * y))},
            )

        # rebalance on normalized residuals; u is the scaled dual, so it rescales with rho
        if iteration % settings.SDP_ADAPT_EVERY == 0:
            primal_rel = float(np.linalg.norm(r_primal)) / max(
                float(np.linalg.norm(Gv)), float(np.linalg.norm(s)), float(np.linalg.norm(h)), 1e-300
            )
            dual_rel = float(np.linalg.norm(r_dual)) / max(float(np.linalg.norm(Gty)), float(np.linalg.norm(q)), 1e-300)
            ratio = math.sqrt(primal_rel / max(dual_rel, 1e-300))
            if ratio > settings.SDP_ADAPT_RATIO or ratio < 1.0 / settings.SDP_ADAPT_RATIO:
                new_rho = min(max(rho * ratio, rho_min), rho_max)
                u *= rho / new_rho
                rho = new_rho

    if residuals is None:
        iterate, residuals = best
        message = f"SDP solver stopped after {max_iters} iterations (best residual {best_score:.2e})"
        if strict:
            raise MaxIters(message, residuals.to_dict())
        logger.warning(f"⚠️ {message}; returning the best iterate")
        return iterate, residuals

    return SdpIterate(v=D * v, s=s / E, y=E * rho * u), residuals


def solve_sdp(
    instance: SdpInstance,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    strict: bool = False,
    warm_start: Optional[SdpIterate] = None,
) -> Tuple[np.ndarray, np.ndarray, SdpResiduals]:
    """
    Solve the relaxed SDP.

    Returns:
        Tuple of (X, Y, residuals); see solve_sdp_iterate for the arguments
    """
    iterate, residuals = solve_sdp_iterate(instance, tol=tol, max_iters=max_iters, strict=strict, warm_start=warm_start)
    X, Y = instance.split(iterate.v)
    return X, Y, residuals


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def block_spectrum(X, Y) -> np.ndarray:
    """Eigenvalues of [[X, I], [I, Y]] in descending order."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    eye = np.eye(n)
    w = np.linalg.eigvalsh(sym(np.block([[X, eye], [eye, Y]])))
    return w[::-1]


def check_rank(X, Y) -> float:
    """lambda_{n+1} / lambda_1 of [[X, I], [I, Y]]; the relaxation is exact when this vanishes."""
    w = block_spectrum(X, Y)
    n = np.asarray(X).shape[0]
    return float(w[n] / w[0])


def reconstruct_gain(system: LtiSystem, Y, gamma: float) -> np.ndarray:
    """
    Gain C with C^T C = Y A + A^T Y + Y B B^T Y.

    Raises:
        IndefiniteS: the right-hand side has a clearly negative eigenvalue
        GainBoundViolated: its largest eigenvalue exceeds gamma (1 + 1e-6)
    """
    Y = np.asarray(Y, dtype=float)
    A = system.A
    S = sym(Y @ A + A.T @ Y + Y @ system.BBt @ Y)
    w = sym_eig(S).eigenvalues
    scale = max(1.0, float(np.linalg.norm(S, 'fro')), float(np.linalg.norm(Y, 'fro')) * float(np.linalg.norm(A, 'fro')))
    clip = settings.SQRT_CLIP_TOL * scale
    if w[0] < -clip:
        raise IndefiniteS(
            "C^T C has a negative eigenvalue; the SDP solve is inexact",
            {"min_eigenvalue": float(w[0]), "clip": clip},
        )
    if w[-1] > gamma * (1.0 + 1e-6):
        raise GainBoundViolated(
            "reconstructed gain exceeds the bound",
            {"max_eigenvalue": float(w[-1]), "gamma": gamma},
        )
    return sym_sqrt(psd_project(S))


def are_plug_in(system: LtiSystem, C, alpha: float) -> Tuple[float, np.ndarray]:
    """Stationary objective Tr(X) + alpha Tr(C X C^T) at the ARE solution, and that solution."""
    C = np.asarray(C, dtype=float)
    X = solve_are(system, C)
    return float(np.trace(X) + alpha * np.trace(C @ X @ C.T)), X


def verify_stationary(system: LtiSystem, C, alpha: float) -> float:
    return are_plug_in(system, C, alpha)[0]


def lmi_margins(instance: SdpInstance, X, Y) -> Tuple[float, float, float]:
    """Smallest eigenvalue of each constraint block (all >= 0 when feasible)."""
    return tuple(float(np.linalg.eigvalsh(block)[0]) for block in instance.blocks(X, Y))


def scalar_stationary_closed_form(a: float, alpha: float, gamma: float) -> Tuple[float, float]:
    """
    Optimal stationary (x, u) of a scalar source.

    Returns:
        Case A (-1/2a, 0); Case B (sqrt(alpha), 2a/sqrt(alpha) + 1/alpha);
        Case C ((a + sqrt(a^2 + gamma)) / gamma, gamma)
    """
    low, high = case_thresholds(a, gamma)
    if alpha > high:
        return -0.5 / a, 0.0
    if alpha < low:
        return (a + math.sqrt(a * a + gamma)) / gamma, gamma
    root = math.sqrt(alpha)
    return root, 2.0 * a / root + 1.0 / alpha


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StationarySolution:
    X: np.ndarray
    Y: np.ndarray
    C: np.ndarray
    objective_value: float
    rank_gap: float
    rank_exact: bool
    are_objective: float
    relative_mismatch: float
    certified: bool
    residuals: SdpResiduals
    lmi_margins: Tuple[float, float, float]
    iterate: Optional[SdpIterate] = field(default=None, repr=False)

    @property
    def u_matrix(self) -> np.ndarray:
        return sym(self.C.T @ self.C)

    def to_dict(self) -> Dict[str, object]:
        result = {
            "X": self.X.tolist(),
            "Y": self.Y.tolist(),
            "C": self.C.tolist(),
            "objective_value": self.objective_value,
            "rank_gap": self.rank_gap,
            "rank_exact": self.rank_exact,
            "are_objective": self.are_objective,
            "relative_mismatch": self.relative_mismatch,
            "certified": self.certified,
            "solver_residuals": self.residuals.to_dict(),
            "lmi_margins": list(self.lmi_margins),
        }
        if self.X.shape == (1, 1):
            result["x_star"] = float(self.X[0, 0])
            result["u_star"] = float(self.u_matrix[0, 0])
        return result


def _certify(instance: SdpInstance, iterate: SdpIterate, residuals: SdpResiduals) -> StationarySolution:
    system, alpha, gamma = instance.system, instance.alpha, instance.gamma
    X, Y = instance.split(iterate.v)
    rank_gap = check_rank(X, Y)
    rank_exact = rank_gap <= settings.RANK_EXACT_TOL
    C = reconstruct_gain(system, Y, gamma)
    are_objective, _ = are_plug_in(system, C, alpha)
    objective = instance.objective(X, Y)
    mismatch = abs(objective - are_objective) / max(abs(are_objective), 1e-300)
    return StationarySolution(
        X=X,
        Y=Y,
        C=C,
        objective_value=objective,
        rank_gap=rank_gap,
        rank_exact=rank_exact,
        are_objective=are_objective,
        relative_mismatch=mismatch,
        certified=residuals.converged and rank_exact and mismatch <= settings.RANK_EXACT_TOL,
        residuals=residuals,
        lmi_margins=lmi_margins(instance, X, Y),
        iterate=iterate,
    )


def solve_stationary(
    system: LtiSystem,
    alpha: float,
    gamma: float,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    warm_start: Optional[SdpIterate] = None,
) -> StationarySolution:
    """
    Solve the relaxed SDP and certify the result.

    The run is certified when the solver converged, the rank gap is at most
    1e-6 and the SDP objective matches the ARE plug-in value to 1e-6
    relative. An uncertified run is polished by warm-started re-solves at a
    tighter tolerance; if it still fails, the ARE objective of the
    reconstructed gain is reported as an upper bound.

    Args:
        system: Stable source
        alpha: Information price
        gamma: Gain bound
        tol: Solver tolerance (default from settings)
        max_iters: Iteration cap per solve (default from settings)
        warm_start: Iterate of a solve on the same system and gamma

    Returns:
        StationarySolution
    """
    tol = settings.SDP_TOL if tol is None else tol
    instance = assemble_sdp(system, alpha, gamma)
    iterate, residuals = solve_sdp_iterate(instance, tol=tol, max_iters=max_iters, warm_start=warm_start)
    solution = None
    for polish in range(settings.SDP_POLISH_ROUNDS + 1):
        if polish:
            if residuals.converged:
                tol = max(tol * settings.SDP_POLISH_FACTOR, settings.SDP_POLISH_FLOOR)
            logger.info(f"🔧 Polishing SDP iterate (round {polish}, tol {tol:.1e})")
            iterate, residuals = solve_sdp_iterate(instance, tol=tol, max_iters=max_iters, warm_start=iterate)
        try:
            solution = _certify(instance, iterate, residuals)
        except (IndefiniteS, GainBoundViolated):
            if polish == settings.SDP_POLISH_ROUNDS:
                raise
            continue
        if solution.certified:
            break
    if not solution.certified:
        logger.warning(
            f"⚠️ Stationary solution not certified (rank gap {solution.rank_gap:.2e}, "
            f"mismatch {solution.relative_mismatch:.2e})"
        )
    return solution


def riccati_convergence_check(
    system: LtiSystem,
    C,
    X0=None,
    horizon_factor: float = 50.0,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Integrate the Riccati flow with the constant gain C from X0 (default 0)
    over T = horizon_factor / |Re lambda_max(A)| and compare with the ARE.

    Returns:
        Tuple of (||X_T - X_are||_F, X_T, X_are)
    """
    C = np.asarray(C, dtype=float)
    n = system.n
    U = sym(C.T @ C)
    X_are = solve_are(system, C)
    T = horizon_factor / abs(system.spectral_abscissa)
    X0 = np.zeros((n, n)) if X0 is None else X0

    # step bounded by the linearized closed-loop rate around X_are
    rate = 2.0 * float(np.linalg.norm(system.A, 2)) + 2.0 * float(np.linalg.norm(U, 2)) * max(
        float(np.linalg.norm(X_are, 2)), float(np.linalg.norm(X0, 2))
    )
    dt = min(T / settings.DEFAULT_DT_DIVISIONS, 0.5 / max(rate, 1e-12))

    gamma = float(np.linalg.eigvalsh(U)[-1]) + 1.0
    horizon = validate_horizon(system, 0.0, T, X0, alpha=1.0, gamma=gamma)
    trajectory = integrate_riccati(system, horizon, GainSchedule.constant(0.0, T, U), dt)
    X_T = trajectory.X[-1]
    return float(np.linalg.norm(X_T - X_are, 'fro')), X_T, X_are


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def random_system(n: int, rng: np.random.Generator) -> LtiSystem:
    """
    Random stable pair: A = M - (lambda_max(sym M) + margin) I, B orthogonal
    from the QR factor of a Gaussian matrix with positive R diagonal.
    """
    M = rng.standard_normal((n, n))
    A = M - (float(np.linalg.eigvalsh(sym(M))[-1]) + settings.RANDOM_SYSTEM_MARGIN) * np.eye(n)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return validate_system(A, Q * signs)


@dataclass(frozen=True, eq=False)
class TrialResult:
    trial: int
    ok: bool
    rank_gap: float = math.nan
    certified: bool = False
    relative_mismatch: float = math.nan
    block_eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    gain_eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    error: Optional[str] = None


@dataclass(frozen=True, eq=False)
class ExperimentSummary:
    n: int
    alpha: float
    gamma: float
    seed: int
    trials: Tuple[TrialResult, ...]

    @property
    def succeeded(self) -> int:
        return sum(1 for t in self.trials if t.ok)

    @property
    def rank_exact_count(self) -> int:
        return sum(1 for t in self.trials if t.ok and t.rank_gap <= settings.RANK_EXACT_TOL)

    def to_dict(self) -> Dict[str, object]:
        gaps = np.array([t.rank_gap for t in self.trials if t.ok])
        mismatches = np.array([t.relative_mismatch for t in self.trials if t.ok])
        total = len(self.trials)
        return {
            "n": self.n,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "seed": self.seed,
            "trials": total,
            "succeeded": self.succeeded,
            "failed": total - self.succeeded,
            "rank_exact": self.rank_exact_count,
            "rank_exact_fraction": self.rank_exact_count / total if total else 0.0,
            "certified": sum(1 for t in self.trials if t.certified),
            "max_rank_gap": float(gaps.max()) if gaps.size else None,
            "median_rank_gap": float(np.median(gaps)) if gaps.size else None,
            "max_relative_mismatch": float(mismatches.max()) if mismatches.size else None,
            "errors": sorted({t.error for t in self.trials if t.error}),
        }


def _run_trial(n: int, alpha: float, gamma: float, seed: int, trial: int, tol, max_iters) -> TrialResult:
    rng = np.random.default_rng([seed, trial])
    try:
        system = random_system(n, rng)
        solution = solve_stationary(system, alpha, gamma, tol=tol, max_iters=max_iters)
    except KbGainError as e:
        logger.warning(f"⚠️ Trial {trial} failed: {e.code}: {e.message}")
        return TrialResult(trial=trial, ok=False, error=e.code)
    return TrialResult(
        trial=trial,
        ok=True,
        rank_gap=solution.rank_gap,
        certified=solution.certified,
        relative_mismatch=solution.relative_mismatch,
        block_eigenvalues=block_spectrum(solution.X, solution.Y),
        gain_eigenvalues=np.linalg.eigvalsh(solution.u_matrix),
    )


def random_experiment(
    n: int,
    alpha: float,
    gamma: float,
    trials: int,
    seed: int,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    max_workers: int = 1,
) -> ExperimentSummary:
    """
    Rank-exactness study over random stable systems. Trial k draws from
    default_rng([seed, k]), so results do not depend on max_workers.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    logger.info(f"🧪 Random experiment: n={n}, alpha={alpha}, gamma={gamma}, {trials} trials")

    def run(trial: int) -> TrialResult:
        return _run_trial(n, alpha, gamma, seed, trial, tol, max_iters)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(k) for k in range(trials)]

    summary = ExperimentSummary(n=n, alpha=float(alpha), gamma=float(gamma), seed=int(seed), trials=tuple(results))
    logger.info(f"📊 Rank-exact in {summary.rank_exact_count}/{trials} trials")
    return summary


@dataclass(frozen=True, eq=False)
class SweepPoint:
    alpha: float
    gain_eigenvalues: np.ndarray
    mi_rate: float
    objective: float
    certified: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "alpha": self.alpha,
            "gain_eigenvalues": self.gain_eigenvalues.tolist(),
            "mi_rate": self.mi_rate,
            "objective": self.objective,
            "certified": self.certified,
        }


def alpha_sweep(
    system: LtiSystem,
    alphas: Sequence[float],
    gamma: float,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
) -> List[SweepPoint]:
    """
    Optimal stationary gain across a range of alpha: eigenvalues of C^T C
    (saturating at 0 and gamma) and the information rate Tr(C X C^T).
    Only the objective changes with alpha, so each solve starts from the
    previous iterate.
    """
    points = []
    previous = None
    for alpha in alphas:
        solution = solve_stationary(system, float(alpha), gamma, tol=tol, max_iters=max_iters, warm_start=previous)
        previous = solution.iterate
        _, X_are = are_plug_in(system, solution.C, float(alpha))
        C = solution.C
        points.append(SweepPoint(
            alpha=float(alpha),
            gain_eigenvalues=np.linalg.eigvalsh(solution.u_matrix),
            mi_rate=float(np.trace(C @ X_are @ C.T)),
            objective=solution.are_objective,
            certified=solution.certified,
        ))
        logger.debug(f"📉 alpha={alpha:.4g}: MI rate {points[-1].mi_rate:.6g}")
    return points


def _write_rows(path: Union[str, Path], header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, np.integer)) else format(v, '.17g') for v in row])
    return path


def block_spectra_to_csv(summary: ExperimentSummary, path: Union[str, Path]) -> Path:
    """(trial, index, eigenvalue) of [[X, I], [I, Y]], descending per trial."""
    rows = ((t.trial, i, w) for t in summary.trials if t.ok for i, w in enumerate(t.block_eigenvalues))
    return _write_rows(path, ["trial", "index", "eigenvalue"], rows)


def gain_spectra_to_csv(summary: ExperimentSummary, path: Union[str, Path]) -> Path:
    """(trial, index, eigenvalue) of C^T C."""
    rows = ((t.trial, i, w) for t in summary.trials if t.ok for i, w in enumerate(t.gain_eigenvalues))
    return _write_rows(path, ["trial", "index", "eigenvalue"], rows)


def sweep_to_csv(points: Sequence[SweepPoint], path: Union[str, Path]) -> Path:
    """(alpha, index, eigenvalue) of C^T C per alpha."""
    rows = ((p.alpha, i, w) for p in points for i, w in enumerate(p.gain_eigenvalues))
    return _write_rows(path, ["alpha", "index", "eigenvalue"], rows)


def block_spectrum_to_csv(X, Y, path: Union[str, Path]) -> Path:
    """(index, eigenvalue) of [[X, I], [I, Y]], descending."""
    return _write_rows(path, ["index", "eigenvalue"], enumerate(block_spectrum(X, Y)))
