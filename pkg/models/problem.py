"""
Problem data for the channel-gain control problem: the source model, the
finite horizon and piecewise-constant gain schedules.
All values are immutable after construction.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from config import settings
from models.errors import (
    DimensionMismatch,
    InvalidHorizon,
    InvalidSchedule,
    InvalidSystem,
    NotHurwitz,
    SingularB,
)

logger = logging.getLogger(__name__)


def _frozen(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    arr.setflags(write=False)
    return arr


def _psd_floor(matrix: np.ndarray) -> float:
    """Smallest eigenvalue allowed for a matrix to count as PSD."""
    return -settings.PSD_TOL * max(1.0, float(np.linalg.norm(matrix, 'fro')))


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Source model d x = A x dt + B d w with A Hurwitz and B nonsingular."""
    A: np.ndarray
    B: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def BBt(self) -> np.ndarray:
        return self.B @ self.B.T

    @property
    def spectral_abscissa(self) -> float:
        """Largest real part among the eigenvalues of A."""
        return float(np.max(np.linalg.eigvals(self.A).real))


@dataclass(frozen=True, eq=False)
class HorizonSpec:
    """Finite horizon [t0, t1] with initial covariance and cost weights."""
    t0: float
    t1: float
    X0: np.ndarray
    alpha: float
    gamma: float

    @property
    def length(self) -> float:
        return self.t1 - self.t0


def validate_system(A, B) -> LtiSystem:
    """
    Validate the source model assumptions.

    Args:
        A: Drift matrix (n x n), must be Hurwitz
        B: Diffusion matrix (n x n), must be nonsingular

    Returns:
        Validated LtiSystem
    """
    A = _frozen(A)
    B = _frozen(B)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A must be square", {"A_shape": list(A.shape)})
    if B.shape != A.shape:
        raise DimensionMismatch(
            "A and B must be square and of the same dimension",
            {"A_shape": list(A.shape), "B_shape": list(B.shape)},
        )
    for name, matrix in (("A", A), ("B", B)):
        if not np.all(np.isfinite(matrix)):
            raise InvalidSystem(
                f"{name} has non-finite entries",
                {"matrix": name, "non_finite": int(np.count_nonzero(~np.isfinite(matrix)))},
            )

    real_parts = np.linalg.eigvals(A).real
    worst = float(np.max(real_parts))
    if worst >= -settings.HURWITZ_MARGIN:
        raise NotHurwitz(
            f"A is not Hurwitz: max Re(lambda) = {worst:.3e}",
            {"max_real_eigenvalue": worst},
        )

    sigma_min = float(np.linalg.svd(B, compute_uv=False)[-1])
    if sigma_min <= settings.RANK_TOL:
        raise SingularB(
            f"B is singular: sigma_min = {sigma_min:.3e}",
            {"sigma_min": sigma_min},
        )

    return LtiSystem(A=A, B=B)


def validate_horizon(system: LtiSystem, t0: float, t1: float, X0, alpha: float, gamma: float) -> HorizonSpec:
    """
    Validate the horizon data against the system dimension.

    Returns:
        Validated HorizonSpec
    """
    X0 = _frozen(X0)
    if not np.all(np.isfinite(X0)):
        raise InvalidHorizon("X0 has non-finite entries")
    if X0.shape != (system.n, system.n):
        raise DimensionMismatch(
            "X0 must match the state dimension",
            {"X0_shape": list(X0.shape), "n": system.n},
        )
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise InvalidHorizon("t0 and t1 must be finite", {"t0": t0, "t1": t1})
    if not t1 > t0:
        raise InvalidHorizon("t1 must be greater than t0", {"t0": t0, "t1": t1})
    if not 0 < alpha < np.inf:
        raise InvalidHorizon("alpha must be positive and finite", {"alpha": alpha})
    if not 0 < gamma < np.inf:
        raise InvalidHorizon("gamma must be positive and finite", {"gamma": gamma})
    if not np.allclose(X0, X0.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(X0).max()))):
        raise InvalidHorizon("X0 must be symmetric")
    min_eig = float(np.linalg.eigvalsh(X0)[0])
    if min_eig < _psd_floor(X0):
        raise InvalidHorizon("X0 must be positive semidefinite", {"min_eigenvalue": min_eig})
    return HorizonSpec(t0=float(t0), t1=float(t1), X0=X0, alpha=float(alpha), gamma=float(gamma))


def gain_to_u(C) -> np.ndarray:
    """
    Map a channel gain C to the control variable U = C^T C.

    Args:
        C: Gain matrix (m x n)

    Returns:
        Exactly symmetric n x n PSD matrix
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 0:
        C = C.reshape(1, 1)
    if C.ndim != 2:
        raise DimensionMismatch("C must be a matrix", {"C_shape": list(C.shape)})
    U = C.T @ C
    return 0.5 * (U + U.T)


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """
    Piecewise-constant control U_t: values[i] holds on
    [breakpoints[i], breakpoints[i+1]].
    """
    breakpoints: Tuple[float, ...]
    values: Tuple[np.ndarray, ...]
    _lengths: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breakpoints)
        values = tuple(_frozen(v) for v in self.values)
        if len(breaks) < 2:
            raise InvalidSchedule("a schedule needs at least two breakpoints")
        if len(values) != len(breaks) - 1:
            raise InvalidSchedule(
                "one value per interval is required",
                {"breakpoints": len(breaks), "values": len(values)},
            )
        if not np.all(np.isfinite(breaks)):
            raise InvalidSchedule("breakpoints must be finite", {"breakpoints": list(breaks)})
        diffs = np.diff(breaks)
        if np.any(diffs <= 0):
            raise InvalidSchedule("breakpoints must be strictly increasing", {"breakpoints": list(breaks)})
        shape = values[0].shape
        for v in values:
            if v.shape != shape or v.shape[0] != v.shape[1]:
                raise InvalidSchedule("schedule values must be square and of equal size")
            if not np.all(np.isfinite(v)):
                raise InvalidSchedule("schedule values must be finite")
            if not np.allclose(v, v.T, atol=1e-12 * max(1.0, float(np.abs(v).max()))):
                raise InvalidSchedule("schedule values must be symmetric")
            if float(np.linalg.eigvalsh(v)[0]) < _psd_floor(v):
                raise InvalidSchedule("schedule values must be positive semidefinite")
        object.__setattr__(self, 'breakpoints', breaks)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, '_lengths', tuple(float(d) for d in diffs))

    @classmethod
    def constant(cls, t0: float, t1: float, U) -> "GainSchedule":
        return cls(breakpoints=(t0, t1), values=(U,))

    @classmethod
    def from_gains(cls, breakpoints: Sequence[float], gains: Sequence) -> "GainSchedule":
        """Build a schedule from channel gains C_i (U_i = C_i^T C_i)."""
        return cls(breakpoints=tuple(breakpoints), values=tuple(gain_to_u(C) for C in gains))

    @classmethod
    def scalar(cls, breakpoints: Sequence[float], values: Sequence[float]) -> "GainSchedule":
        """Build a 1 x 1 schedule from plain numbers."""
        return cls(breakpoints=tuple(breakpoints), values=tuple(np.array([[float(u)]]) for u in values))

    @property
    def t0(self) -> float:
        return self.breakpoints[0]

    @property
    def t1(self) -> float:
        return self.breakpoints[-1]

    @property
    def n(self) -> int:
        return self.values[0].shape[0]

    @property
    def intervals(self) -> List[Tuple[float, float, np.ndarray]]:
        return [(self.breakpoints[i], self.breakpoints[i + 1], self.values[i]) for i in range(len(self.values))]

    @property
    def switch_times(self) -> List[float]:
        """Interior breakpoints at which the value actually changes."""
        switches = []
        for i in range(1, len(self.values)):
            if not np.array_equal(self.values[i - 1], self.values[i]):
                switches.append(self.breakpoints[i])
        return switches

    def value_at(self, t: float) -> np.ndarray:
        """Value in force at time t (right-continuous; the last value at t1)."""
        if t < self.t0 or t > self.t1:
            raise InvalidSchedule("time outside the schedule", {"t": t, "t0": self.t0, "t1": self.t1})
        idx = int(np.searchsorted(self.breakpoints, t, side='right')) - 1
        return self.values[min(idx, len(self.values) - 1)]

    def check_bounds(self, gamma: float) -> None:
        """Raise InvalidSchedule unless every value satisfies U <= gamma I."""
        for v in self.values:
            top = float(np.linalg.eigvalsh(v)[-1])
            if top > gamma + settings.PSD_TOL * max(1.0, gamma):
                raise InvalidSchedule(
                    "schedule value exceeds the gain bound",
                    {"max_eigenvalue": top, "gamma": gamma},
                )

    def merged(self) -> "GainSchedule":
        """Drop negligible intervals and merge equal neighbours."""
        span = self.t1 - self.t0
        breaks = [self.t0]
        values: List[np.ndarray] = []
        for start, end, v in self.intervals:
            if end - start <= 1e-14 * span:
                continue
            if values and np.array_equal(values[-1], v):
                breaks[-1] = end
                continue
            if values:
                breaks[-1] = start
            values.append(v)
            breaks.append(end)
        breaks[-1] = self.t1
        breaks[0] = self.t0
        return GainSchedule(breakpoints=tuple(breaks), values=tuple(values))

    def scalar_values(self) -> List[float]:
        return [float(v[0, 0]) for v in self.values]


@dataclass(frozen=True, eq=False)
class ChannelSchedule:
    """Piecewise-constant channel gain C_t (gains[i] holds on [breakpoints[i], breakpoints[i+1]])."""
    breakpoints: Tuple[float, ...]
    gains: Tuple[np.ndarray, ...]

    def __post_init__(self):
        gains = tuple(_frozen(C) for C in self.gains)
        object.__setattr__(self, 'breakpoints', tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, 'gains', gains)
        if len(gains) != len(self.breakpoints) - 1:
            raise InvalidSchedule("one gain per interval is required")
        for C in gains:
            if C.ndim != 2 or C.shape != gains[0].shape:
                raise DimensionMismatch("gains must be matrices of equal shape")

    @classmethod
    def constant(cls, t0: float, t1: float, C) -> "ChannelSchedule":
        return cls(breakpoints=(t0, t1), gains=(C,))

    def to_gain_schedule(self) -> GainSchedule:
        return GainSchedule.from_gains(self.breakpoints, self.gains)
