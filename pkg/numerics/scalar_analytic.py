"""
Exact finite-horizon gain control for scalar sources (A = a < 0, B = 1).

The optimal control takes values in {0, u*, gamma} with at most two
switches. Which pattern applies depends on where alpha sits relative to the
two thresholds (Case A / B / C) and on the region-1 trajectory started from
x0; switch times come from closed forms or bracketed root searches on the
switching surface x p = alpha.

Every trajectory piece is a constant-control Riccati flow
x' = 2 a x - u x^2 + 1 with costate p' = 2 (u x - a) p - 1 - alpha u, both of
which have closed forms (see ConstantFlow).
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from config import settings
from models.errors import (
    DimensionMismatch,
    InvalidHorizon,
    InvalidProblem,
    NoSubcaseMatch,
    NotHurwitz,
    RootBracketFailure,
)
from models.problem import GainSchedule, HorizonSpec, LtiSystem, validate_horizon, validate_system
from numerics.riccati_flow import scalar_schedule_cost, scalar_segment

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Problem data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarProblem:
    """Scalar instance: dx = a x dt + dw, channel gain bounded by gamma."""
    a: float
    alpha: float
    gamma: float
    x0: float
    t0: float
    t1: float

    def __post_init__(self):
        if not -np.inf < self.a < 0:
            raise NotHurwitz("scalar drift must be negative", {"a": self.a})
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)):
            raise InvalidHorizon("t0 and t1 must be finite", {"t0": self.t0, "t1": self.t1})
        if not self.t1 > self.t0:
            raise InvalidHorizon("t1 must be greater than t0", {"t0": self.t0, "t1": self.t1})
        if not 0 < self.alpha < np.inf:
            raise InvalidHorizon("alpha must be positive and finite", {"alpha": self.alpha})
        if not 0 < self.gamma < np.inf:
            raise InvalidHorizon("gamma must be positive and finite", {"gamma": self.gamma})
        if not 0 <= self.x0 < np.inf:
            raise InvalidHorizon("x0 must be non-negative and finite", {"x0": self.x0})
        if self.x0 == 0:
            logger.warning("⚠️ x0 = 0 lies outside the positive-variance hypothesis; using the same formulas")

    @classmethod
    def from_problem(cls, system: LtiSystem, horizon: HorizonSpec) -> "ScalarProblem":
        """Scalar view of a validated 1 x 1 problem document (requires B B^T = 1)."""
        if system.n != 1:
            raise DimensionMismatch("scalar analysis needs n = 1", {"n": system.n})
        if abs(float(system.BBt[0, 0]) - 1.0) > 1e-12:
            raise InvalidProblem("scalar analysis assumes B = 1", {"B": float(system.B[0, 0])})
        return cls(
            a=float(system.A[0, 0]),
            alpha=horizon.alpha,
            gamma=horizon.gamma,
            x0=float(horizon.X0[0, 0]),
            t0=horizon.t0,
            t1=horizon.t1,
        )

    def as_system(self) -> LtiSystem:
        return validate_system([[self.a]], [[1.0]])

    def as_horizon(self) -> HorizonSpec:
        return validate_horizon(self.as_system(), self.t0, self.t1, [[self.x0]], self.alpha, self.gamma)

    @property
    def singular_control(self) -> float:
        """u* = 2a/sqrt(alpha) + 1/alpha, the control holding (x, p) at K."""
        return 2.0 * self.a / math.sqrt(self.alpha) + 1.0 / self.alpha

    @property
    def x_k(self) -> float:
        """Terminal state of the region-1 flow passing K = (sqrt(alpha), sqrt(alpha))."""
        return 2.0 * self.a * self.alpha + 2.0 * math.sqrt(self.alpha)


@dataclass(frozen=True)
class CaseLabel:
    label: str
    threshold_low: float
    threshold_high: float

    def to_dict(self) -> Dict[str, object]:
        return {"case": self.label, "threshold_low": self.threshold_low, "threshold_high": self.threshold_high}


def case_thresholds(a: float, gamma: float) -> Tuple[float, float]:
    """(a + sqrt(a^2 + gamma))^2 / gamma^2 and 1 / (4 a^2)."""
    c = math.sqrt(a * a + gamma)
    return (a + c) ** 2 / gamma ** 2, 1.0 / (4.0 * a * a)


def classify_case(problem: ScalarProblem) -> CaseLabel:
    """
    Case A when alpha exceeds 1/(4a^2), Case C below the low threshold,
    Case B in between (both ends inclusive).
    """
    low, high = case_thresholds(problem.a, problem.gamma)
    if problem.alpha > high:
        label = "A"
    elif problem.alpha < low:
        label = "C"
    else:
        label = "B"
    return CaseLabel(label=label, threshold_low=low, threshold_high=high)


def stationary_point(problem: ScalarProblem) -> Tuple[float, float, float]:
    """
    Stationary point (x_e, p_e, u_e) of the canonical equations for the
    problem's case.
    """
    a, alpha, gamma = problem.a, problem.alpha, problem.gamma
    label = classify_case(problem).label
    if label == "A":
        return -0.5 / a, -0.5 / a, 0.0
    if label == "B":
        root = math.sqrt(alpha)
        return root, root, problem.singular_control
    c = math.sqrt(a * a + gamma)
    return (a + c) / gamma, (1.0 + alpha * gamma) / (2.0 * c), gamma


# ---------------------------------------------------------------------------
# Closed-form segments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantFlow:
    """
    Closed-form state and costate under a constant control u on a segment
    starting at (t_start, x_start).

    With c = sqrt(a^2 + u), x_eq = 1/(c - a) and E = exp(-2c (t - t_start)):
        x(t) = x_eq - 2 c d E / (1 + q E),   q = u d
        p(t) = kappa exp(2c (t - t_start)) (1 + q E)^2 + beta (1 + q E),
    with beta = (1 + alpha u) / (2c). The costate is always anchored at the
    end of the segment, so the exponential factor never grows.
    """
    a: float
    u: float
    t_start: float
    x_start: float

    @property
    def c(self) -> float:
        return math.sqrt(self.a * self.a + self.u)

    @property
    def x_eq(self) -> float:
        return 1.0 / (self.c - self.a)

    @property
    def d(self) -> float:
        return (self.x_eq - self.x_start) / (self.c - self.a + self.x_start * self.u)

    @property
    def k3(self) -> float:
        """Integration constant of the textbook form (1/u)(a + c - 2c/(k3 e^{2ct} + 1))."""
        c, a, u, x = self.c, self.a, self.u, self.x_start
        denom = c + a - x * u
        if denom == 0:
            return math.inf
        return (c - a + x * u) / denom * math.exp(-2.0 * c * self.t_start)

    def _decay(self, t):
        return np.exp(-2.0 * self.c * (np.asarray(t, dtype=float) - self.t_start))

    def x(self, t):
        E = self._decay(t)
        q = self.u * self.d
        return self.x_eq - 2.0 * self.c * self.d * E / (1.0 + q * E)

    def x_dot(self, t):
        xt = self.x(t)
        return 2.0 * self.a * xt - self.u * xt * xt + 1.0

    def costate(self, t, t_end: float, p_end: float, alpha: float):
        """Costate on the segment through (t_end, p_end)."""
        q = self.u * self.d
        beta = (1.0 + alpha * self.u) / (2.0 * self.c)
        g = 1.0 + q * self._decay(t)
        g_end = 1.0 + q * self._decay(t_end)
        shift = np.exp(2.0 * self.c * (np.asarray(t, dtype=float) - t_end))
        return (p_end - beta * g_end) * shift * (g / g_end) ** 2 + beta * g

    def time_to_reach(self, target: float) -> Optional[float]:
        """Earliest t >= t_start with x(t) = target, or None if never reached."""
        if target == self.x_start:
            return self.t_start
        q = self.u * self.d
        denom = 2.0 * self.c * self.d + q * (target - self.x_eq)
        if denom == 0:
            return None
        E = (self.x_eq - target) / denom
        if not 0 < E <= 1:
            return None
        return self.t_start - math.log(E) / (2.0 * self.c)


@dataclass(frozen=True)
class RegionOnePath:
    """Region-1 (u = 0) trajectory with x(t0) = x0 and p(t1) = 0."""
    a: float
    x0: float
    t0: float
    t1: float

    @property
    def flow(self) -> ConstantFlow:
        return ConstantFlow(self.a, 0.0, self.t0, self.x0)

    def x(self, t):
        t = np.asarray(t, dtype=float)
        return ((2.0 * self.a * self.x0 + 1.0) * np.exp(2.0 * self.a * (t - self.t0)) - 1.0) / (2.0 * self.a)

    def p(self, t):
        t = np.asarray(t, dtype=float)
        return (np.exp(-2.0 * self.a * (t - self.t1)) - 1.0) / (2.0 * self.a)


@dataclass(frozen=True)
class CostatePath:
    """Costate of a constant-control segment through the anchor (t_end, p_end)."""
    flow: ConstantFlow
    alpha: float
    t_end: float
    p_end: float

    def p(self, t):
        return self.flow.costate(t, self.t_end, self.p_end, self.alpha)


def region1_solution(problem: ScalarProblem) -> RegionOnePath:
    return RegionOnePath(a=problem.a, x0=problem.x0, t0=problem.t0, t1=problem.t1)


def region3_solution(problem: ScalarProblem, x_start: Optional[float] = None, t_start: Optional[float] = None) -> ConstantFlow:
    """
    Region-3 (u = gamma) state flow, from x0 at t0 unless another start is
    given. Tends to (a + sqrt(a^2 + gamma)) / gamma.
    """
    return ConstantFlow(
        a=problem.a,
        u=problem.gamma,
        t_start=problem.t0 if t_start is None else t_start,
        x_start=problem.x0 if x_start is None else x_start,
    )


def region3_costate(problem: ScalarProblem, flow: ConstantFlow, t_end: float, p_end: float) -> CostatePath:
    return CostatePath(flow=flow, alpha=problem.alpha, t_end=t_end, p_end=p_end)


# ---------------------------------------------------------------------------
# Trajectories of schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentDescriptor:
    """One constant-control piece of a scalar trajectory."""
    start: float
    end: float
    u: float
    x_start: float
    x_end: float
    p_start: float
    p_end: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "start": self.start,
            "end": self.end,
            "u": self.u,
            "x_start": self.x_start,
            "x_end": self.x_end,
            "p_start": self.p_start,
            "p_end": self.p_end,
        }


@dataclass(frozen=True, eq=False)
class ClosedFormPath:
    segments: Tuple[SegmentDescriptor, ...]
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    u: np.ndarray


def closed_form_path(problem: ScalarProblem, schedule: GainSchedule, samples_per_segment: int = 64) -> ClosedFormPath:
    """
    Exact (x, p) path of a scalar schedule: x forward from x0, p backward
    from p(t1) = 0, one closed form per segment.
    """
    intervals = schedule.intervals
    flows = []
    x = problem.x0
    for start, end, value in intervals:
        flow = ConstantFlow(problem.a, float(value[0, 0]), start, x)
        flows.append(flow)
        x = float(flow.x(end))

    p_ends = [0.0] * len(intervals)
    p_starts = [0.0] * len(intervals)
    p = 0.0
    for i in range(len(intervals) - 1, -1, -1):
        start, end, _ = intervals[i]
        p_ends[i] = p
        p = float(flows[i].costate(start, end, p, problem.alpha))
        p_starts[i] = p

    segments = []
    t_parts, x_parts, p_parts, u_parts = [], [], [], []
    for i, (start, end, _) in enumerate(intervals):
        flow = flows[i]
        segments.append(SegmentDescriptor(
            start=start,
            end=end,
            u=flow.u,
            x_start=flow.x_start,
            x_end=float(flow.x(end)),
            p_start=p_starts[i],
            p_end=p_ends[i],
        ))
        ts = np.linspace(start, end, samples_per_segment + 1)
        t_parts.append(ts)
        x_parts.append(flow.x(ts))
        p_parts.append(flow.costate(ts, end, p_ends[i], problem.alpha))
        u_parts.append(np.full(ts.size, flow.u))

    return ClosedFormPath(
        segments=tuple(segments),
        t=np.concatenate(t_parts),
        x=np.concatenate(x_parts),
        p=np.concatenate(p_parts),
        u=np.concatenate(u_parts),
    )


def closed_form_path_to_csv(path_data: ClosedFormPath, path: Union[str, Path]) -> Path:
    """Write sampled (t, x, p, u) rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(["t", "x", "p", "u"])
        for row in zip(path_data.t, path_data.x, path_data.p, path_data.u):
            writer.writerow([format(v, '.17g') for v in row])
    return path


# ---------------------------------------------------------------------------
# Switching surface
# ---------------------------------------------------------------------------

def lie_derivative_on_surface(x: float, alpha: float) -> float:
    """Rate of change of V = x p along any of the three vector fields on x p = alpha."""
    return alpha / x - x


def crossing_direction(x: float, alpha: float) -> str:
    """'up' below sqrt(alpha), 'down' above it, 'tangent' at K."""
    rate = lie_derivative_on_surface(x, alpha)
    band = 1e-12 * max(1.0, abs(x), alpha / max(abs(x), 1e-300))
    if rate > band:
        return "up"
    if rate < -band:
        return "down"
    return "tangent"


def _bracketed_roots(f: Callable, lo: float, hi: float, direction: Optional[str] = None) -> List[float]:
    """
    Roots of a smooth residual on [lo, hi]: sign changes located on a
    uniform sample, then refined with brentq. direction 'down' keeps only
    + to - crossings, 'up' only - to +.
    """
    grid = np.linspace(lo, hi, settings.ROOT_SAMPLES + 1)
    values = np.asarray(f(grid), dtype=float)
    roots = []
    if values[0] == 0.0:
        roots.append(lo)
    for i in range(grid.size - 1):
        left, right = values[i], values[i + 1]
        if not (np.isfinite(left) and np.isfinite(right)) or left == 0.0:
            continue
        if left * right > 0:
            continue
        going_down = left > 0
        if direction == "down" and not going_down:
            continue
        if direction == "up" and going_down:
            continue
        if right == 0.0:
            roots.append(float(grid[i + 1]))
            continue
        try:
            root = brentq(lambda t: float(f(t)), grid[i], grid[i + 1], xtol=settings.ROOT_XTOL, maxiter=200)
        except (ValueError, RuntimeError) as e:
            raise RootBracketFailure(f"root refinement failed: {e}", {"bracket": [float(grid[i]), float(grid[i + 1])]})
        roots.append(float(root))
    return roots


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalarSolution:
    """Optimal scalar control with its closed-form trajectory."""
    problem: ScalarProblem
    case: CaseLabel
    subcase: str
    control: GainSchedule
    switch_times: Tuple[float, ...]
    u_star: Optional[float]
    path: ClosedFormPath
    mse_integral: float
    mi: float
    cost: float
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def switch_residuals(self) -> List[float]:
        """|x p - alpha| at every switch time."""
        return [abs(seg.x_start * seg.p_start - self.problem.alpha) for seg in self.path.segments[1:]]

    def to_dict(self) -> Dict[str, object]:
        return {
            "case": self.case.label,
            "subcase": self.subcase,
            "thresholds": {"low": self.case.threshold_low, "high": self.case.threshold_high},
            "breakpoints": list(self.control.breakpoints),
            "values": self.control.scalar_values(),
            "switch_times": list(self.switch_times),
            "u_star": self.u_star,
            "mse_integral": self.mse_integral,
            "mi": self.mi,
            "cost": self.cost,
            "notes": list(self.notes),
            "segments": [s.to_dict() for s in self.path.segments],
        }


def _schedule_from_pieces(t0: float, t1: float, pieces: Sequence[Tuple[float, float]]) -> GainSchedule:
    """
    Build a scalar schedule from (end_time, value) pieces, dropping
    zero-length pieces and merging equal neighbours.
    """
    span = t1 - t0
    breaks = [t0]
    values = []
    for end, value in pieces:
        end = min(max(end, t0), t1)
        if end - breaks[-1] <= 1e-14 * span:
            continue
        breaks.append(end)
        values.append(value)
    if not values:
        return GainSchedule.scalar((t0, t1), (pieces[-1][1],))
    breaks[-1] = t1
    return GainSchedule.scalar(breaks, values).merged()


def _finish(problem: ScalarProblem, case: CaseLabel, subcase: str, schedule: GainSchedule, notes: Sequence[str] = ()) -> ScalarSolution:
    path = closed_form_path(problem, schedule)
    mse, mi, cost = scalar_schedule_cost(problem.a, problem.alpha, problem.x0, schedule)
    u_star = problem.singular_control if case.label == "B" else None
    switches = tuple(schedule.switch_times)
    logger.info(f"🧮 Case {case.label} / subcase {subcase}: {len(switches)} switch(es), cost={cost:.6g}")
    return ScalarSolution(
        problem=problem,
        case=case,
        subcase=subcase,
        control=schedule,
        switch_times=switches,
        u_star=u_star,
        path=path,
        mse_integral=mse,
        mi=mi,
        cost=cost,
        notes=tuple(notes),
    )


def _surface_residual(problem: ScalarProblem, flow: ConstantFlow, region1: RegionOnePath) -> Callable:
    """x_hat(t) p_bar(t) - alpha for a region-3 flow against the terminal region-1 costate."""
    return lambda t: flow.x(t) * region1.p(t) - problem.alpha


def _singular_exit_time(problem: ScalarProblem) -> float:
    """Time at which the terminal region-1 arc leaves K."""
    arg = 2.0 * problem.a * math.sqrt(problem.alpha) + 1.0
    if arg <= 0:
        return problem.t0
    return problem.t1 - math.log(arg) / (2.0 * problem.a)


def _solve_case_a(problem: ScalarProblem, case: CaseLabel, region1: RegionOnePath) -> ScalarSolution:
    t0, t1 = problem.t0, problem.t1
    if problem.x0 * float(region1.p(t0)) <= problem.alpha:
        return _finish(problem, case, "A-1", _schedule_from_pieces(t0, t1, [(t1, 0.0)]))

    flow = region3_solution(problem)
    roots = _bracketed_roots(_surface_residual(problem, flow, region1), t0, t1, direction="down")
    if not roots:
        raise RootBracketFailure("no switching time found for A-2")
    t_switch = roots[0]
    return _finish(problem, case, "A-2", _schedule_from_pieces(t0, t1, [(t_switch, problem.gamma), (t1, 0.0)]))


def _solve_case_b(problem: ScalarProblem, case: CaseLabel, region1: RegionOnePath) -> ScalarSolution:
    t0, t1 = problem.t0, problem.t1
    root_alpha = math.sqrt(problem.alpha)
    u_star = problem.singular_control
    x0 = problem.x0
    surface_start = x0 * float(region1.p(t0))
    dwell_note = "singular arc dwell on K chosen as the segment ending at t''; other dwell placements are also extremal"

    if float(region1.x(t1)) <= problem.x_k:
        return _finish(problem, case, "B-1", _schedule_from_pieces(t0, t1, [(t1, 0.0)]))
    if surface_start < problem.alpha and x0 > root_alpha:
        return _finish(problem, case, "B-2", _schedule_from_pieces(t0, t1, [(t1, 0.0)]))

    t_exit = _singular_exit_time(problem)
    if x0 <= root_alpha:
        notes = [dwell_note]
        if surface_start >= problem.alpha:
            notes.append("x0 <= sqrt(alpha) with x_bar p_bar >= alpha at t0; region-1 approach to K used")
        t_enter = region1.flow.time_to_reach(root_alpha)
        if t_enter is None or t_enter > t_exit:
            raise NoSubcaseMatch("region-1 arc does not reach K before t''", {"t_exit": t_exit})
        schedule = _schedule_from_pieces(t0, t1, [(t_enter, 0.0), (t_exit, u_star), (t1, 0.0)])
        return _finish(problem, case, "B-3", schedule, notes)

    flow = region3_solution(problem)
    for t_switch in _bracketed_roots(_surface_residual(problem, flow, region1), t0, t1, direction="down"):
        if float(flow.x(t_switch)) >= root_alpha:
            schedule = _schedule_from_pieces(t0, t1, [(t_switch, problem.gamma), (t1, 0.0)])
            return _finish(problem, case, "B-4", schedule)

    t_enter = flow.time_to_reach(root_alpha)
    if t_enter is None or t_enter > t_exit:
        raise NoSubcaseMatch("region-3 arc does not reach K before t''", {"t_exit": t_exit})
    schedule = _schedule_from_pieces(t0, t1, [(t_enter, problem.gamma), (t_exit, u_star), (t1, 0.0)])
    return _finish(problem, case, "B-5", schedule, [dwell_note])


def _c4_exit(problem: ScalarProblem, region1: RegionOnePath, t_enter: float) -> Optional[Tuple[float, float]]:
    """
    For a trial entry time t' (switch 0 -> gamma) find the exit time t''
    at which the gamma arc leaves the surface against the terminal region-1
    costate.

    Returns:
        (t'', residual of x p = alpha at t') or None when the arc never leaves
    """
    x_enter = float(region1.x(t_enter))
    flow = region3_solution(problem, x_start=x_enter, t_start=t_enter)
    exits = [
        t for t in _bracketed_roots(_surface_residual(problem, flow, region1), t_enter, problem.t1, direction="down")
        if t > t_enter
    ]
    if not exits:
        return None
    t_exit = exits[0]
    p_enter = float(flow.costate(t_enter, t_exit, float(region1.p(t_exit)), problem.alpha))
    return t_exit, x_enter * p_enter - problem.alpha


def _solve_case_c(problem: ScalarProblem, case: CaseLabel, region1: RegionOnePath) -> ScalarSolution:
    t0, t1 = problem.t0, problem.t1
    alpha = problem.alpha
    root_alpha = math.sqrt(alpha)
    x0 = problem.x0

    if float(region1.x(t1)) <= problem.x_k:
        return _finish(problem, case, "C-1", _schedule_from_pieces(t0, t1, [(t1, 0.0)]))
    if x0 * float(region1.p(t0)) < alpha and x0 > root_alpha:
        return _finish(problem, case, "C-2", _schedule_from_pieces(t0, t1, [(t1, 0.0)]))

    # one switch gamma -> 0 on the surface, with x0 p(t0) > alpha
    flow = region3_solution(problem)
    for t_switch in _bracketed_roots(_surface_residual(problem, flow, region1), t0, t1, direction="down"):
        if not t0 < t_switch < t1:
            continue
        p_start = float(flow.costate(t0, t_switch, float(region1.p(t_switch)), alpha))
        if x0 * p_start > alpha:
            schedule = _schedule_from_pieces(t0, t1, [(t_switch, problem.gamma), (t1, 0.0)])
            return _finish(problem, case, "C-3", schedule)

    # two switches 0 -> gamma -> 0: outer search on the entry time t', which
    # must keep x_bar(t') <= sqrt(alpha)
    if x0 > root_alpha:
        raise NoSubcaseMatch("neither one- nor two-switch system has a valid solution", {"case": "C"})
    t_cap = region1.flow.time_to_reach(root_alpha)
    if t_cap is None or t_cap >= t1:
        t_cap = t1 - 1e-9 * (t1 - t0)
    if t_cap <= t0:
        raise NoSubcaseMatch("region-1 arc starts on K; no entry interval for two switches", {"case": "C"})

    def outer(t_enter):
        t_enter = np.atleast_1d(np.asarray(t_enter, dtype=float))
        out = np.full(t_enter.shape, np.nan)
        for i, t in enumerate(t_enter):
            found = _c4_exit(problem, region1, float(t))
            if found is not None:
                out[i] = found[1]
        return out if out.size > 1 else out[0]

    for t_enter in _bracketed_roots(outer, t0, t_cap):
        found = _c4_exit(problem, region1, t_enter)
        if found is None:
            continue
        t_exit = found[0]
        if not t0 <= t_enter < t_exit < t1:
            continue
        x_enter = float(region1.x(t_enter))
        if x_enter > root_alpha * (1.0 + 1e-12):
            continue
        gamma_flow = region3_solution(problem, x_start=x_enter, t_start=t_enter)
        p_enter = float(gamma_flow.costate(t_enter, t_exit, float(region1.p(t_exit)), alpha))
        p_start = float(region1.flow.costate(t0, t_enter, p_enter, alpha))
        if x0 * p_start <= alpha * (1.0 + 1e-12):
            schedule = _schedule_from_pieces(t0, t1, [(t_enter, 0.0), (t_exit, problem.gamma), (t1, 0.0)])
            return _finish(problem, case, "C-4", schedule)

    raise NoSubcaseMatch("neither one- nor two-switch system has a valid solution", {"case": "C"})


def solve_scalar(problem: ScalarProblem) -> ScalarSolution:
    """
    Optimal finite-horizon control of a scalar problem.

    Args:
        problem: Validated scalar instance

    Returns:
        ScalarSolution with subcase tag, schedule and closed-form path
    """
    case = classify_case(problem)
    region1 = region1_solution(problem)
    logger.debug(f"🔎 Case {case.label}: thresholds ({case.threshold_low:.6g}, {case.threshold_high:.6g})")
    if case.label == "A":
        return _solve_case_a(problem, case, region1)
    if case.label == "B":
        return _solve_case_b(problem, case, region1)
    return _solve_case_c(problem, case, region1)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _pattern_costs(problem: ScalarProblem, values: Tuple[float, float, float], s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Exact cost of the three-piece schedule (v1, v2, v3) for every (s1, s2) pair."""
    a, alpha = problem.a, problem.alpha
    v1, v2, v3 = values
    x1, i1 = scalar_segment(a, v1, problem.x0, s1 - problem.t0)
    x2, i2 = scalar_segment(a, v2, x1, s2 - s1)
    _, i3 = scalar_segment(a, v3, x2, problem.t1 - s2)
    return (1.0 + alpha * v1) * i1 + (1.0 + alpha * v2) * i2 + (1.0 + alpha * v3) * i3


def brute_force_oracle(
    problem: ScalarProblem,
    grid_resolution: int = 256,
    max_workers: int = 1,
) -> Tuple[float, GainSchedule]:
    """
    Exhaustive search over three-piece schedules with values in
    {0, u* (Case B only), gamma} and switch times on a uniform grid.

    Args:
        problem: Scalar instance
        grid_resolution: Number of grid intervals (>= 64)
        max_workers: Threads over value patterns (result is order-independent)

    Returns:
        Tuple of (best cost, best schedule)
    """
    if grid_resolution < settings.ORACLE_MIN_RESOLUTION:
        raise ValueError(f"grid_resolution must be at least {settings.ORACLE_MIN_RESOLUTION}")

    levels = [0.0, problem.gamma]
    if classify_case(problem).label == "B":
        levels.insert(1, problem.singular_control)
    patterns = list(product(levels, repeat=3))

    grid = np.linspace(problem.t0, problem.t1, grid_resolution + 1)
    i, j = np.triu_indices(grid.size)
    s1, s2 = grid[i], grid[j]

    def best_of(values):
        costs = _pattern_costs(problem, values, s1, s2)
        k = int(np.argmin(costs))
        return float(costs[k]), k

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(best_of, patterns))
    else:
        results = [best_of(p) for p in patterns]

    best_cost, best_pattern, best_k = math.inf, patterns[0], 0
    for values, (cost, k) in zip(patterns, results):
        if cost < best_cost:
            best_cost, best_pattern, best_k = cost, values, k

    v1, v2, v3 = best_pattern
    schedule = _schedule_from_pieces(problem.t0, problem.t1, [(s1[best_k], v1), (s2[best_k], v2), (problem.t1, v3)])
    logger.debug(f"🔍 Oracle ({grid_resolution} intervals): best cost {best_cost:.9g}")
    return best_cost, schedule


# ---------------------------------------------------------------------------
# Phase portrait
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhasePortrait:
    x: np.ndarray
    p: np.ndarray
    x_dot: np.ndarray
    p_dot: np.ndarray
    region: np.ndarray


def phase_portrait(
    problem: ScalarProblem,
    x_values: Optional[Sequence[float]] = None,
    p_values: Optional[Sequence[float]] = None,
) -> PhasePortrait:
    """
    Canonical vector field on a grid of the positive quadrant. Region 1
    below the switching surface (u = 0), region 3 above it (u = gamma),
    region 2 on it (u* in Case B, otherwise 0).
    """
    if x_values is None:
        x_values = np.linspace(0.05, 2.0, 40)
    if p_values is None:
        p_values = np.linspace(0.05, 2.0, 40)
    X, P = np.meshgrid(np.asarray(x_values, dtype=float), np.asarray(p_values, dtype=float), indexing='ij')
    a, alpha, gamma = problem.a, problem.alpha, problem.gamma

    V = X * P
    band = settings.SINGULAR_BAND * np.maximum(1.0, alpha)
    region = np.where(V < alpha - band, 1, np.where(V > alpha + band, 3, 2))
    on_surface = problem.singular_control if classify_case(problem).label == "B" else 0.0
    U = np.select([region == 1, region == 3], [0.0, gamma], default=on_surface)

    x_dot = 2.0 * a * X - U * X * X + 1.0
    p_dot = 2.0 * (U * X - a) * P - 1.0 - alpha * U
    return PhasePortrait(x=X.ravel(), p=P.ravel(), x_dot=x_dot.ravel(), p_dot=p_dot.ravel(), region=region.ravel())


def phase_portrait_to_csv(portrait: PhasePortrait, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(["x", "p", "x_dot", "p_dot", "region"])
        for x, p, xd, pd, r in zip(portrait.x, portrait.p, portrait.x_dot, portrait.p_dot, portrait.region):
            writer.writerow([format(x, '.17g'), format(p, '.17g'), format(xd, '.17g'), format(pd, '.17g'), int(r)])
    return path
