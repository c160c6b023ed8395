"""
Monte-Carlo check of the Kalman-Bucy error identity E||x - x_hat||^2 = Tr(X_t).

The source SDE, the channel and the filter are discretized with
Euler-Maruyama on the Riccati grid; the filter gain uses the covariance
computed by the Riccati flow on that same grid.

Every path owns a Philox stream keyed by (seed, path index), so a report
depends on the seed alone, not on the block size or the worker count.
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from config import settings
from models.errors import DimensionMismatch, SeedStreamExhausted
from models.problem import ChannelSchedule, HorizonSpec, LtiSystem
from numerics.matrix_ops import sym_sqrt
from numerics.riccati_flow import RiccatiTrajectory, integrate_riccati

logger = logging.getLogger(__name__)

_UINT64 = 2 ** 64


@dataclass(frozen=True, eq=False)
class SimulationReport:
    """Result of a Monte-Carlo run."""
    num_paths: int
    dt_sim: float
    mse_estimate: float
    stderr: float
    mse_theory: float
    z_score: float
    seed: int
    block_size: int
    num_blocks: int
    per_path: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "num_paths": self.num_paths,
            "dt_sim": self.dt_sim,
            "mse_estimate": self.mse_estimate,
            "stderr": self.stderr,
            "mse_theory": self.mse_theory,
            "z_score": self.z_score,
            "seed": self.seed,
            "block_size": self.block_size,
            "num_blocks": self.num_blocks,
        }


def _path_generator(seed: int, path: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, path index); the counter walks the steps."""
    key = np.array([seed, path], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _simulate_block(
    system: LtiSystem,
    channel: ChannelSchedule,
    trajectory: RiccatiTrajectory,
    X0_root: np.ndarray,
    seed: int,
    first_path: int,
    num_paths: int,
) -> np.ndarray:
    """Integrated squared estimation error of paths first_path .. first_path + num_paths - 1."""
    generators = [_path_generator(seed, first_path + i) for i in range(num_paths)]
    n = system.n
    m = channel.gains[0].shape[0]
    A_t = system.A.T
    B_t = system.B.T
    times = trajectory.times
    steps = trajectory.grid.step_segment
    chunk = settings.MC_STEP_CHUNK

    x = np.stack([g.standard_normal(n) for g in generators]) @ X0_root
    x_hat = np.zeros((num_paths, n))
    err_prev = np.sum((x - x_hat) ** 2, axis=1)
    total = np.zeros(num_paths)
    noise = None

    for k, seg in enumerate(steps):
        offset = k % chunk
        if offset == 0:
            width = min(chunk, steps.size - k)
            # (width, paths, n + m): xi then eta for every step
            noise = np.stack([g.standard_normal((width, n + m)) for g in generators], axis=1)
        h = times[k + 1] - times[k]
        sqrt_h = math.sqrt(h)
        C = channel.gains[seg]
        K_t = (trajectory.X[k] @ C.T).T
        xi = noise[offset, :, :n]
        eta = noise[offset, :, n:]

        dy = (x @ C.T) * h + sqrt_h * eta
        innovation = dy - (x_hat @ C.T) * h
        x = x + (x @ A_t) * h + sqrt_h * (xi @ B_t)
        x_hat = x_hat + (x_hat @ A_t) * h + innovation @ K_t

        err = np.sum((x - x_hat) ** 2, axis=1)
        total += 0.5 * h * (err_prev + err)
        err_prev = err

    return total


def simulate_paths(
    system: LtiSystem,
    horizon: HorizonSpec,
    channel: ChannelSchedule,
    num_paths: int,
    dt_sim: float,
    seed: int,
    max_workers: int = 1,
    block_size: Optional[int] = None,
) -> SimulationReport:
    """
    Simulate source, channel and filter paths and compare the empirical
    time-integrated MSE with the Riccati prediction.

    Args:
        system: Source model
        horizon: Horizon and initial covariance (x_0 ~ N(0, X0), x_hat_0 = 0)
        channel: Piecewise-constant gain C_t covering the horizon
        num_paths: Number of sample paths (>= 2)
        dt_sim: Target time step
        seed: Non-negative integer seed of the counter-based stream
        max_workers: Threads used for path blocks (does not affect the result)
        block_size: Paths per worker task (does not affect the result)

    Returns:
        SimulationReport
    """
    if num_paths < 2:
        raise ValueError("num_paths must be at least 2")
    if not dt_sim > 0:
        raise ValueError("dt_sim must be positive")
    if not 0 <= seed < _UINT64:
        raise ValueError("seed must be a non-negative 64-bit integer")
    for C in channel.gains:
        if C.shape[1] != system.n:
            raise DimensionMismatch("gain must have n columns", {"C_shape": list(C.shape), "n": system.n})

    block_size = block_size or settings.MC_BLOCK_SIZE
    num_blocks = math.ceil(num_paths / block_size)
    if num_paths > _UINT64:
        raise SeedStreamExhausted("too many paths for a 64-bit stream key", {"num_paths": num_paths})

    trajectory = integrate_riccati(system, horizon, channel.to_gain_schedule(), dt_sim)
    X0_root = sym_sqrt(horizon.X0)

    sizes = [min(block_size, num_paths - b * block_size) for b in range(num_blocks)]
    logger.info(f"🎲 Simulating {num_paths} paths in {num_blocks} blocks ({trajectory.grid.step_segment.size} steps)")

    def run(block: int) -> np.ndarray:
        return _simulate_block(system, channel, trajectory, X0_root, seed, block * block_size, sizes[block])

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, range(num_blocks)))
    else:
        results = [run(b) for b in range(num_blocks)]

    # reduction in path-index order
    per_path = np.concatenate(results)
    estimate = float(np.mean(per_path))
    stderr = float(np.std(per_path, ddof=1) / math.sqrt(num_paths))
    theory = trajectory.mse_integral
    z = (estimate - theory) / stderr if stderr > 0 else 0.0
    per_path.setflags(write=False)

    logger.info(f"📊 MSE estimate {estimate:.6g} ± {stderr:.2g} vs theory {theory:.6g} (z = {z:+.2f})")
    return SimulationReport(
        num_paths=num_paths,
        dt_sim=float(dt_sim),
        mse_estimate=estimate,
        stderr=stderr,
        mse_theory=theory,
        z_score=float(z),
        seed=int(seed),
        block_size=block_size,
        num_blocks=num_blocks,
        per_path=per_path,
    )


def estimate_mse(report: SimulationReport) -> Tuple[float, float, float, bool]:
    """
    Statistical verdict on a report.

    Returns:
        Tuple of (estimate, stderr, z_score, passed) with passed = |z| <= 3
    """
    if report.stderr > 0:
        z = (report.mse_estimate - report.mse_theory) / report.stderr
    else:
        z = 0.0 if report.mse_estimate == report.mse_theory else math.copysign(math.inf, report.mse_estimate - report.mse_theory)
    return report.mse_estimate, report.stderr, z, abs(z) <= settings.Z_SCORE_LIMIT


def write_paths_csv(report: SimulationReport, path: Union[str, Path]) -> Path:
    """Per-path integrated squared error (debug output)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(["path", "integrated_sq_error"])
        for i, value in enumerate(report.per_path):
            writer.writerow([i, format(value, '.17g')])
    return path
