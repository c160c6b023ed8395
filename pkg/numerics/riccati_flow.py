"""
Riccati covariance flow of the Kalman-Bucy filter under a piecewise-constant
gain schedule, and the MSE / mutual-information cost functionals.
"""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from config import settings
from models.errors import DimensionMismatch, NegativeCovariance, ScheduleGap
from models.problem import GainSchedule, HorizonSpec, LtiSystem
from numerics.matrix_ops import sym

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RiccatiGrid:
    """Time grid aligned to schedule breakpoints; each segment has an even step count."""
    times: np.ndarray
    step_segment: np.ndarray
    segment_nodes: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class RiccatiTrajectory:
    """Covariance path X_t on the grid plus its cost components."""
    times: np.ndarray
    X: np.ndarray
    grid: RiccatiGrid
    schedule: GainSchedule
    mse_integral: float
    mi: float
    cost: float

    def trace_x(self) -> np.ndarray:
        return np.trace(self.X, axis1=1, axis2=2)

    def node_controls(self) -> np.ndarray:
        """U in force at each node (right-continuous, last node uses the last value)."""
        U = np.empty_like(self.X)
        for seg, (start, end) in enumerate(self.grid.segment_nodes):
            U[start:end] = self.schedule.values[seg]
        U[-1] = self.schedule.values[-1]
        return U

    def trace_ux(self) -> np.ndarray:
        return np.einsum('kij,kji->k', self.node_controls(), self.X)


def _even_steps(length: float, dt: float) -> int:
    # tolerance keeps exact multiples of dt from gaining an extra step
    half = math.ceil(length / (2.0 * dt) - 1e-9)
    return max(2, 2 * half)


def build_grid(schedule: GainSchedule, dt: float) -> RiccatiGrid:
    """
    Build the integration grid: no step straddles a breakpoint, and every
    interval is split into an even number of equal steps (for Simpson).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    pieces = []
    step_segment = []
    segment_nodes = []
    node = 0
    for seg, (start, end, _value) in enumerate(schedule.intervals):
        m = _even_steps(end - start, dt)
        pts = np.linspace(start, end, m + 1)
        pieces.append(pts if seg == 0 else pts[1:])
        step_segment.extend([seg] * m)
        segment_nodes.append((node, node + m))
        node += m
    times = np.concatenate(pieces)
    return RiccatiGrid(
        times=times,
        step_segment=np.asarray(step_segment, dtype=int),
        segment_nodes=tuple(segment_nodes),
    )


def riccati_rhs(A: np.ndarray, BBt: np.ndarray, X: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Right-hand side A X + X A^T - X U X + B B^T."""
    return A @ X + X @ A.T - X @ U @ X + BBt


def _check_coverage(system: LtiSystem, horizon: HorizonSpec, schedule: GainSchedule) -> None:
    if schedule.n != system.n:
        raise DimensionMismatch("schedule dimension does not match the system", {"schedule_n": schedule.n, "n": system.n})
    tol = 1e-12 * max(1.0, abs(horizon.t0), abs(horizon.t1))
    if abs(schedule.t0 - horizon.t0) > tol or abs(schedule.t1 - horizon.t1) > tol:
        raise ScheduleGap(
            "schedule does not cover the horizon",
            {"schedule": [schedule.t0, schedule.t1], "horizon": [horizon.t0, horizon.t1]},
        )
    schedule.check_bounds(horizon.gamma)


def _simpson_segment(seg: np.ndarray, h: float) -> float:
    return float(h / 3.0 * (seg[0] + seg[-1] + 4.0 * seg[1:-1:2].sum() + 2.0 * seg[2:-1:2].sum()))


def simpson(values: np.ndarray, grid: RiccatiGrid) -> float:
    """Composite Simpson rule applied segment by segment."""
    total = 0.0
    for start, end in grid.segment_nodes:
        h = (grid.times[end] - grid.times[start]) / (end - start)
        total += _simpson_segment(values[start:end + 1], h)
    return total


def _rk4_flow(system: LtiSystem, X0: np.ndarray, schedule: GainSchedule, grid: RiccatiGrid) -> np.ndarray:
    """Covariance on every grid node; raises NegativeCovariance when a step breaks PSD."""
    A = system.A
    BBt = system.BBt
    times = grid.times
    X = np.empty((times.size, system.n, system.n))
    X[0] = X0
    scale = max(1.0, float(np.linalg.norm(X0, 'fro')), float(np.linalg.norm(BBt, 'fro')))

    for k, seg in enumerate(grid.step_segment):
        U = schedule.values[seg]
        h = times[k + 1] - times[k]
        Xk = X[k]
        k1 = riccati_rhs(A, BBt, Xk, U)
        k2 = riccati_rhs(A, BBt, Xk + 0.5 * h * k1, U)
        k3 = riccati_rhs(A, BBt, Xk + 0.5 * h * k2, U)
        k4 = riccati_rhs(A, BBt, Xk + h * k3, U)
        X_next = sym(Xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not np.all(np.isfinite(X_next)):
            raise NegativeCovariance("covariance diverged; reduce dt", {"t": float(times[k + 1]), "dt": float(h)})
        min_eig = float(np.linalg.eigvalsh(X_next)[0])
        if min_eig < -settings.NEGATIVE_COV_TOL * scale:
            raise NegativeCovariance(
                "covariance lost positive semidefiniteness; reduce dt",
                {"t": float(times[k + 1]), "dt": float(h), "min_eigenvalue": min_eig},
            )
        X[k + 1] = X_next
    return X


def integrate_riccati(
    system: LtiSystem,
    horizon: HorizonSpec,
    schedule: GainSchedule,
    dt: Optional[float] = None,
) -> RiccatiTrajectory:
    """
    Integrate X' = A X + X A^T - X U X + B B^T with classical RK4.

    A step that breaks positive semidefiniteness restarts the whole flow
    with half the step, at most settings.MAX_STEP_HALVINGS times.

    Args:
        system: Source model
        horizon: Horizon, initial covariance and weights
        schedule: Piecewise-constant control covering [t0, t1]
        dt: Target step (default (t1 - t0) / 4096)

    Returns:
        RiccatiTrajectory with Simpson-integrated cost components
    """
    _check_coverage(system, horizon, schedule)
    if dt is None:
        dt = horizon.length / settings.DEFAULT_DT_DIVISIONS
    if not dt > 0:
        raise ValueError("dt must be positive")

    halvings = 0
    while True:
        grid = build_grid(schedule, dt)
        try:
            X = _rk4_flow(system, horizon.X0, schedule, grid)
            break
        except NegativeCovariance as e:
            if halvings >= settings.MAX_STEP_HALVINGS:
                raise NegativeCovariance(
                    f"{e.message} (still failing after {halvings} step halvings)",
                    {**e.details, "halvings": halvings},
                )
            halvings += 1
            dt = 0.5 * dt
            logger.warning(f"⚠️ {e.message} at t = {e.details['t']:.6g}; retrying with dt = {dt:.3e}")

    times = grid.times
    trace_x = np.trace(X, axis1=1, axis2=2)
    mse = simpson(trace_x, grid)

    # Tr(U X) per segment, with the segment's own U at both of its end nodes
    mi = 0.0
    for seg, (start, end) in enumerate(grid.segment_nodes):
        U = schedule.values[seg]
        seg_trace = np.einsum('ij,kji->k', U, X[start:end + 1])
        h = (times[end] - times[start]) / (end - start)
        mi += 0.5 * _simpson_segment(seg_trace, h)

    X.setflags(write=False)
    cost = mse + 2.0 * horizon.alpha * mi
    logger.debug(f"📈 Riccati flow: {grid.step_segment.size} steps, mse={mse:.6g}, mi={mi:.6g}")
    return RiccatiTrajectory(
        times=times,
        X=X,
        grid=grid,
        schedule=schedule,
        mse_integral=mse,
        mi=mi,
        cost=cost,
    )


def evaluate_cost(
    system: LtiSystem,
    horizon: HorizonSpec,
    schedule: GainSchedule,
    dt: Optional[float] = None,
) -> Tuple[float, float, float]:
    """
    Cost components of a schedule.

    Returns:
        Tuple of (mse_integral, mi, cost) with cost = mse_integral + 2 alpha mi
    """
    traj = integrate_riccati(system, horizon, schedule, dt)
    return traj.mse_integral, traj.mi, traj.cost


def scalar_segment(a: float, u, x_start, duration) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact flow of x' = 2 a x - u x^2 + 1 under a constant control u >= 0.

    Args:
        a: Scalar drift (< 0)
        u: Constant control (scalar or array)
        x_start: State at the start of the segment (scalar or array)
        duration: Segment length (scalar or array, >= 0)

    Returns:
        Tuple of (x at the end of the segment, integral of x over the segment)
    """
    u = np.asarray(u, dtype=float)
    x0 = np.asarray(x_start, dtype=float)
    S = np.asarray(duration, dtype=float)

    c = np.sqrt(a * a + u)
    x_eq = 1.0 / (c - a)
    d = (x_eq - x0) / (c - a + x0 * u)
    E = np.exp(-2.0 * c * S)
    x_end = x_eq - 2.0 * c * d * E / (1.0 + u * d * E)

    safe_u = np.where(u > 0, u, 1.0)
    log_part = (np.log1p(u * d * E) - np.log1p(u * d)) / safe_u
    integral = x_eq * S + np.where(u > 0, log_part, d * (E - 1.0))
    return x_end, integral


def scalar_schedule_cost(a: float, alpha: float, x0: float, schedule: GainSchedule) -> Tuple[float, float, float]:
    """
    Exact cost components of a scalar schedule (B = 1).

    Returns:
        Tuple of (mse_integral, mi, cost)
    """
    x = float(x0)
    mse = 0.0
    mi = 0.0
    for start, end, value in schedule.intervals:
        u = float(value[0, 0])
        x_end, integral = scalar_segment(a, u, x, end - start)
        mse += float(integral)
        mi += 0.5 * u * float(integral)
        x = float(x_end)
    return mse, mi, mse + 2.0 * alpha * mi


def trajectory_to_csv(trajectory: RiccatiTrajectory, path: Union[str, Path]) -> Path:
    """
    Write the trajectory as CSV: t, X upper-triangle entries, Tr(X), Tr(UX).

    Returns:
        Path of the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = trajectory.X.shape[1]
    rows, cols = np.triu_indices(n)
    header = ["t"] + [f"X_{i}{j}" for i, j in zip(rows, cols)] + ["trace_X", "trace_UX"]
    trace_x = trajectory.trace_x()
    trace_ux = trajectory.trace_ux()
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for k, t in enumerate(trajectory.times):
            entries = trajectory.X[k][rows, cols]
            writer.writerow([format(v, '.17g') for v in (t, *entries, trace_x[k], trace_ux[k])])
    return path
