"""
Exception hierarchy for the channel-gain toolkit.
Every domain failure carries a machine-readable code so the CLI and the
HTTP service can emit it as an error document.
"""
from typing import Any, Dict, Optional


class KbGainError(Exception):
    """Base class for all domain errors raised by the toolkit."""

    code = "kbgain_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """
        Serialize the error for JSON output.

        Returns:
            Dict with error code, message and details
        """
        return {
            "error": self.code,
            "message": self.message,
            "details": self.details,
        }


# Problem data
class InvalidProblem(KbGainError):
    code = "invalid_problem"


class InvalidSystem(KbGainError):
    code = "invalid_system"


class DimensionMismatch(KbGainError):
    code = "dimension_mismatch"


class NotHurwitz(KbGainError):
    code = "not_hurwitz"


class SingularB(KbGainError):
    code = "singular_b"


class InvalidHorizon(KbGainError):
    code = "invalid_horizon"


class InvalidSchedule(KbGainError):
    code = "invalid_schedule"


# Linear algebra
class ResonantSpectrum(KbGainError):
    code = "resonant_spectrum"


class NoConvergence(KbGainError):
    code = "no_convergence"


class LyapunovFailure(KbGainError):
    code = "lyapunov_failure"


class IndefiniteInput(KbGainError):
    code = "indefinite_input"


class AsymmetricInput(KbGainError):
    code = "asymmetric_input"


class NumericalFailure(KbGainError):
    code = "numerical_failure"


# Integration
class NegativeCovariance(KbGainError):
    code = "negative_covariance"


class ScheduleGap(KbGainError):
    code = "schedule_gap"


class SeedStreamExhausted(KbGainError):
    code = "seed_stream_exhausted"


# Scalar synthesis
class NoSubcaseMatch(KbGainError):
    code = "no_subcase_match"


class RootBracketFailure(KbGainError):
    code = "root_bracket_failure"


# Stationary design
class MaxIters(KbGainError):
    code = "max_iters"


class InfeasibleDetected(KbGainError):
    code = "infeasible_detected"


class IndefiniteS(KbGainError):
    code = "indefinite_s"


class GainBoundViolated(KbGainError):
    code = "gain_bound_violated"
