"""
Pydantic models for problem documents (input) and result documents (output).
Every result the CLI or the service emits is built through one of these
models, so it re-validates against the same schema when read back.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from models.errors import InvalidProblem
from models.problem import ChannelSchedule, GainSchedule, HorizonSpec, LtiSystem, validate_horizon, validate_system
from numerics.matrix_ops import sym_sqrt

logger = logging.getLogger(__name__)

Matrix = Union[float, List[List[float]]]


def as_matrix(value: Matrix) -> np.ndarray:
    """Bare numbers are 1 x 1 matrices."""
    arr = np.array(value, dtype=float)
    return arr.reshape(1, 1) if arr.ndim == 0 else arr


class ScheduleDocument(BaseModel):
    """Piecewise-constant schedule given either as U values or as gains C."""
    breakpoints: List[float] = Field(..., min_length=2, description="Strictly increasing times, first t0, last t1")
    values: Optional[List[Matrix]] = Field(None, description="Control U = C^T C per interval")
    gains: Optional[List[Matrix]] = Field(None, description="Channel gain C per interval")

    @model_validator(mode='after')
    def one_representation(self):
        if (self.values is None) == (self.gains is None):
            raise ValueError("exactly one of 'values' or 'gains' is required")
        return self


class ProblemDocument(BaseModel):
    """Problem input document."""
    A: Matrix = Field(..., description="Drift matrix (n x n)")
    B: Matrix = Field(..., description="Diffusion matrix (n x n)")
    X0: Matrix = Field(0.0, description="Initial covariance")
    t0: float = Field(0.0, description="Start of the horizon")
    t1: float = Field(1.0, description="End of the horizon")
    alpha: float = Field(..., description="Weight of the information cost")
    gamma: float = Field(..., description="Gain bound")
    schedule: Optional[ScheduleDocument] = Field(None, description="Candidate control for riccati/verify-pmp/simulate")

    @field_validator('A', 'B', 'X0')
    @classmethod
    def rectangular(cls, value: Matrix) -> Matrix:
        if isinstance(value, list):
            widths = {len(row) for row in value}
            if len(widths) > 1:
                raise ValueError("matrix rows must have equal length")
        return value


def load_document(source: Union[str, Path, Dict[str, Any]]) -> ProblemDocument:
    """
    Parse a problem document from a JSON file path or an already-decoded dict.

    Raises:
        FileNotFoundError: the path does not exist
        InvalidProblem: the JSON or its shape is invalid
    """
    if isinstance(source, dict):
        data = source
    else:
        path = Path(source)
        if not path.is_file():
            raise FileNotFoundError(f"problem file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise InvalidProblem(f"problem file is not valid JSON: {e}", {"path": str(path)})
    try:
        return ProblemDocument.model_validate(data)
    except ValidationError as e:
        raise InvalidProblem("problem document failed validation", {"errors": json.loads(e.json())})


def build_problem(document: ProblemDocument) -> Tuple[LtiSystem, HorizonSpec]:
    system = validate_system(as_matrix(document.A), as_matrix(document.B))
    X0 = as_matrix(document.X0)
    if X0.shape == (1, 1) and system.n > 1:
        X0 = float(X0[0, 0]) * np.eye(system.n)
    horizon = validate_horizon(system, document.t0, document.t1, X0, document.alpha, document.gamma)
    return system, horizon


def load_problem(source: Union[str, Path, Dict[str, Any]]) -> Tuple[LtiSystem, HorizonSpec]:
    """
    Load and validate a problem document.

    Args:
        source: JSON file path or decoded dict

    Returns:
        Tuple of (LtiSystem, HorizonSpec)
    """
    return build_problem(load_document(source))


def document_schedule(document: ProblemDocument) -> Optional[GainSchedule]:
    """The document's schedule as a control schedule, if one is given."""
    sched = document.schedule
    if sched is None:
        return None
    if sched.gains is not None:
        return GainSchedule.from_gains(sched.breakpoints, [as_matrix(C) for C in sched.gains])
    return GainSchedule(breakpoints=tuple(sched.breakpoints), values=tuple(as_matrix(U) for U in sched.values))


def document_channel(document: ProblemDocument) -> Optional[ChannelSchedule]:
    """The document's schedule as channel gains; U values are mapped to their symmetric square roots."""
    sched = document.schedule
    if sched is None:
        return None
    if sched.gains is not None:
        return ChannelSchedule(breakpoints=tuple(sched.breakpoints), gains=tuple(as_matrix(C) for C in sched.gains))
    return ChannelSchedule(breakpoints=tuple(sched.breakpoints), gains=tuple(sym_sqrt(as_matrix(U)) for U in sched.values))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

class ResultBase(BaseModel):
    command: str
    artifacts: List[str] = Field(default_factory=list, description="CSV files written next to the result")


class ErrorResult(BaseModel):
    error: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)


class ClassifyResult(ResultBase):
    case: str
    threshold_low: float
    threshold_high: float
    a: float
    alpha: float
    gamma: float
    x_e: float
    p_e: float
    u_e: float


class SegmentResult(BaseModel):
    start: float
    end: float
    u: float
    x_start: float
    x_end: float
    p_start: float
    p_end: float


class ScalarSolutionResult(ResultBase):
    case: str
    subcase: str
    thresholds: Dict[str, float]
    breakpoints: List[float]
    values: List[float]
    switch_times: List[float] = Field(..., max_length=2)
    u_star: Optional[float] = None
    mse_integral: float
    mi: float
    cost: float
    notes: List[str] = Field(default_factory=list)
    segments: List[SegmentResult]


class SdpResidualsResult(BaseModel):
    primal: float
    dual: float
    gap: float
    iterations: int
    converged: bool
    rho: float


class StationaryResult(ResultBase):
    X: List[List[float]]
    Y: List[List[float]]
    C: List[List[float]]
    objective_value: float
    rank_gap: float
    rank_exact: bool
    are_objective: float
    relative_mismatch: float
    certified: bool
    solver_residuals: SdpResidualsResult
    lmi_margins: List[float]
    x_star: Optional[float] = None
    u_star: Optional[float] = None


class PmpResult(ResultBase):
    max_gap: float
    num_points: int
    final_costate_norm: float
    costate_asymmetry: float
    sign_profile: Optional[Dict[str, int]] = None


class SimulationResult(ResultBase):
    num_paths: int
    dt_sim: float
    mse_estimate: float
    stderr: float
    mse_theory: float
    z_score: float
    seed: int
    block_size: int
    num_blocks: int
    passed: bool


class RiccatiResult(ResultBase):
    mse_integral: float
    mi: float
    cost: float
    num_steps: int
    final_X: List[List[float]]


class ExperimentResult(ResultBase):
    n: int
    alpha: float
    gamma: float
    seed: int
    trials: int
    succeeded: int
    failed: int
    rank_exact: int
    rank_exact_fraction: float
    certified: int
    max_rank_gap: Optional[float] = None
    median_rank_gap: Optional[float] = None
    max_relative_mismatch: Optional[float] = None
    errors: List[str] = Field(default_factory=list)


class SweepPointResult(BaseModel):
    alpha: float
    gain_eigenvalues: List[float]
    mi_rate: float
    objective: float
    certified: bool


class SweepResult(ResultBase):
    gamma: float
    points: List[SweepPointResult]
    mi_rate_non_increasing: bool


class PhasePortraitResult(ResultBase):
    case: str
    subcase: str
    num_points: int
