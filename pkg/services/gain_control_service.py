"""
Service layer shared by the CLI and the HTTP API.

Each operation returns (success, payload, message): on success the payload
is a result document validated by models.schemas, on failure it is the
error document of the KbGainError that stopped the run.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.environment import get_config
from models.errors import InvalidProblem, InvalidSchedule, KbGainError, NumericalFailure
from models.schemas import (
    ClassifyResult,
    ExperimentResult,
    PhasePortraitResult,
    PmpResult,
    ProblemDocument,
    RiccatiResult,
    ScalarSolutionResult,
    SimulationResult,
    StationaryResult,
    SweepResult,
    build_problem,
    document_channel,
    document_schedule,
)
from numerics.kb_simulator import estimate_mse, simulate_paths, write_paths_csv
from numerics.pmp_engine import gap_to_csv, integrate_canonical, scalar_sign_profile
from numerics.riccati_flow import integrate_riccati, trajectory_to_csv
from numerics.scalar_analytic import (
    ScalarProblem,
    classify_case,
    closed_form_path_to_csv,
    phase_portrait,
    phase_portrait_to_csv,
    solve_scalar,
    stationary_point,
)
from numerics.stationary_sdp import (
    alpha_sweep,
    block_spectra_to_csv,
    block_spectrum_to_csv,
    gain_spectra_to_csv,
    random_experiment,
    solve_stationary,
    sweep_to_csv,
)

logger = logging.getLogger(__name__)

ServiceResult = Tuple[bool, Dict[str, Any], str]


def _failure(error: KbGainError, context: str) -> ServiceResult:
    logger.error(f"❌ {context} failed: {error.code}: {error.message}")
    return False, error.to_dict(), error.message


def _invalid_argument(error: ValueError, context: str) -> ServiceResult:
    return _failure(InvalidProblem(str(error)), context)


def _numerical_failure(error: Exception, context: str) -> ServiceResult:
    return _failure(NumericalFailure(f"{type(error).__name__}: {error}"), context)


class GainControlService:
    """Runs toolkit operations and writes their CSV artifacts."""

    def __init__(self, output_dir: Optional[str] = None, max_workers: Optional[int] = None):
        config = get_config()
        self.output_dir = Path(output_dir or config.output_dir)
        self.max_workers = max_workers or config.max_workers

    def _artifact(self, name: str) -> Path:
        return self.output_dir / name

    def _scalar_problem(self, document: ProblemDocument) -> ScalarProblem:
        system, horizon = build_problem(document)
        return ScalarProblem.from_problem(system, horizon)

    def _require_schedule(self, document: ProblemDocument):
        schedule = document_schedule(document)
        if schedule is None:
            raise InvalidSchedule("the problem document has no schedule")
        return schedule

    def classify(self, a: float, alpha: float, gamma: float) -> ServiceResult:
        """Case label, thresholds and stationary point of a scalar instance."""
        try:
            problem = ScalarProblem(a=a, alpha=alpha, gamma=gamma, x0=1.0, t0=0.0, t1=1.0)
            label = classify_case(problem)
            x_e, p_e, u_e = stationary_point(problem)
            result = ClassifyResult(
                command="classify",
                case=label.label,
                threshold_low=label.threshold_low,
                threshold_high=label.threshold_high,
                a=a,
                alpha=alpha,
                gamma=gamma,
                x_e=x_e,
                p_e=p_e,
                u_e=u_e,
            )
            return True, result.model_dump(mode='json'), f"Case {label.label}"
        except KbGainError as e:
            return _failure(e, "classify")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "classify")

    def solve_scalar(self, document: ProblemDocument, emit_csv: bool = True) -> ServiceResult:
        """Optimal finite-horizon scalar control, plus the (t, x, p, u) trajectory CSV."""
        try:
            solution = solve_scalar(self._scalar_problem(document))
            artifacts = []
            if emit_csv:
                artifacts.append(str(closed_form_path_to_csv(solution.path, self._artifact("scalar_trajectory.csv"))))
            result = ScalarSolutionResult(command="solve-scalar", artifacts=artifacts, **solution.to_dict())
            return True, result.model_dump(mode='json'), f"Subcase {solution.subcase}"
        except KbGainError as e:
            return _failure(e, "solve-scalar")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "solve-scalar")

    def solve_stationary(
        self,
        document: ProblemDocument,
        tol: Optional[float] = None,
        max_iters: Optional[int] = None,
        emit_csv: bool = True,
    ) -> ServiceResult:
        """Stationary gain from the relaxed SDP with its certificates."""
        config = get_config()
        try:
            system, horizon = build_problem(document)
            solution = solve_stationary(
                system,
                horizon.alpha,
                horizon.gamma,
                tol=tol if tol is not None else config.sdp_tol,
                max_iters=max_iters if max_iters is not None else config.sdp_max_iters,
            )
            artifacts = []
            if emit_csv:
                path = block_spectrum_to_csv(solution.X, solution.Y, self._artifact("block_spectrum.csv"))
                artifacts.append(str(path))
            result = StationaryResult(command="solve-stationary", artifacts=artifacts, **solution.to_dict())
            message = "certified" if solution.certified else "not certified"
            return True, result.model_dump(mode='json'), message
        except KbGainError as e:
            return _failure(e, "solve-stationary")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "solve-stationary")

    def verify_pmp(self, document: ProblemDocument, dt: Optional[float] = None, emit_csv: bool = True) -> ServiceResult:
        """Hamiltonian-gap certificate of the document's schedule."""
        try:
            system, horizon = build_problem(document)
            schedule = self._require_schedule(document)
            certificate = integrate_canonical(system, horizon, schedule, dt)
            sign_profile = None
            if system.n == 1:
                labels = scalar_sign_profile(certificate, horizon.alpha)
                sign_profile = {label: labels.count(label) for label in ("0", "gamma", "singular")}
            asymmetry = float(max(np.abs(P - P.T).max() for P in certificate.P))
            artifacts = [str(gap_to_csv(certificate, self._artifact("pmp_gap.csv")))] if emit_csv else []
            result = PmpResult(
                command="verify-pmp",
                artifacts=artifacts,
                max_gap=certificate.max_gap,
                num_points=int(certificate.times.size),
                final_costate_norm=float(np.linalg.norm(certificate.P[-1])),
                costate_asymmetry=asymmetry,
                sign_profile=sign_profile,
            )
            return True, result.model_dump(mode='json'), f"max gap {certificate.max_gap:.3e}"
        except KbGainError as e:
            return _failure(e, "verify-pmp")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "verify-pmp")

    def simulate(
        self,
        document: ProblemDocument,
        num_paths: int,
        dt: float,
        seed: int,
        emit_paths: bool = False,
    ) -> ServiceResult:
        """Monte-Carlo check of the error-covariance identity for the document's schedule."""
        try:
            system, horizon = build_problem(document)
            channel = document_channel(document)
            if channel is None:
                raise InvalidSchedule("the problem document has no schedule")
            report = simulate_paths(
                system,
                horizon,
                channel,
                num_paths=num_paths,
                dt_sim=dt,
                seed=seed,
                max_workers=self.max_workers,
                block_size=get_config().mc_block_size,
            )
            _, _, _, passed = estimate_mse(report)
            artifacts = [str(write_paths_csv(report, self._artifact("paths.csv")))] if emit_paths else []
            result = SimulationResult(command="simulate", artifacts=artifacts, passed=passed, **report.to_dict())
            return True, result.model_dump(mode='json'), f"z = {report.z_score:+.2f}"
        except KbGainError as e:
            return _failure(e, "simulate")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "simulate")
        except ValueError as e:
            return _invalid_argument(e, "simulate")

    def riccati(self, document: ProblemDocument, dt: Optional[float] = None, emit_csv: bool = True) -> ServiceResult:
        """Covariance path and cost components of the document's schedule."""
        try:
            system, horizon = build_problem(document)
            schedule = self._require_schedule(document)
            trajectory = integrate_riccati(system, horizon, schedule, dt)
            artifacts = [str(trajectory_to_csv(trajectory, self._artifact("trajectory.csv")))] if emit_csv else []
            result = RiccatiResult(
                command="riccati",
                artifacts=artifacts,
                mse_integral=trajectory.mse_integral,
                mi=trajectory.mi,
                cost=trajectory.cost,
                num_steps=int(trajectory.times.size - 1),
                final_X=trajectory.X[-1].tolist(),
            )
            return True, result.model_dump(mode='json'), f"cost {trajectory.cost:.6g}"
        except KbGainError as e:
            return _failure(e, "riccati")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "riccati")
        except ValueError as e:
            return _invalid_argument(e, "riccati")

    def experiment(
        self,
        n: int,
        alpha: float,
        gamma: float,
        trials: int,
        seed: int,
        tol: Optional[float] = None,
        max_iters: Optional[int] = None,
        emit_csv: bool = True,
    ) -> ServiceResult:
        """Rank-exactness study over random stable systems."""
        config = get_config()
        try:
            summary = random_experiment(
                n,
                alpha,
                gamma,
                trials,
                seed,
                tol=tol if tol is not None else config.sdp_tol,
                max_iters=max_iters if max_iters is not None else config.sdp_max_iters,
                max_workers=self.max_workers,
            )
            artifacts = []
            if emit_csv:
                artifacts.append(str(block_spectra_to_csv(summary, self._artifact("block_spectra.csv"))))
                artifacts.append(str(gain_spectra_to_csv(summary, self._artifact("gain_spectra.csv"))))
            result = ExperimentResult(command="experiment", artifacts=artifacts, **summary.to_dict())
            return True, result.model_dump(mode='json'), f"{summary.rank_exact_count}/{trials} rank-exact"
        except KbGainError as e:
            return _failure(e, "experiment")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "experiment")
        except ValueError as e:
            return _invalid_argument(e, "experiment")

    def alpha_sweep(
        self,
        document: ProblemDocument,
        alphas: Sequence[float],
        tol: Optional[float] = None,
        max_iters: Optional[int] = None,
        emit_csv: bool = True,
    ) -> ServiceResult:
        """Stationary gain spectrum and information rate across alpha values."""
        try:
            system, horizon = build_problem(document)
            points = alpha_sweep(system, sorted(alphas), horizon.gamma, tol=tol, max_iters=max_iters)
            rates = [p.mi_rate for p in points]
            non_increasing = all(b <= a + 1e-6 * max(1.0, abs(a)) for a, b in zip(rates, rates[1:]))
            artifacts = [str(sweep_to_csv(points, self._artifact("alpha_sweep.csv")))] if emit_csv else []
            result = SweepResult(
                command="alpha-sweep",
                artifacts=artifacts,
                gamma=horizon.gamma,
                points=[p.to_dict() for p in points],
                mi_rate_non_increasing=non_increasing,
            )
            return True, result.model_dump(mode='json'), f"{len(points)} alpha values"
        except KbGainError as e:
            return _failure(e, "alpha-sweep")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "alpha-sweep")

    def phase_portrait(self, document: ProblemDocument, emit_csv: bool = True) -> ServiceResult:
        """Vector field of the canonical equations and the optimal trajectory."""
        try:
            problem = self._scalar_problem(document)
            portrait = phase_portrait(problem)
            solution = solve_scalar(problem)
            artifacts: List[str] = []
            if emit_csv:
                artifacts.append(str(phase_portrait_to_csv(portrait, self._artifact("phase_portrait.csv"))))
                artifacts.append(str(closed_form_path_to_csv(solution.path, self._artifact("scalar_trajectory.csv"))))
            result = PhasePortraitResult(
                command="phase-portrait",
                artifacts=artifacts,
                case=solution.case.label,
                subcase=solution.subcase,
                num_points=int(portrait.x.size),
            )
            return True, result.model_dump(mode='json'), f"Case {solution.case.label}"
        except KbGainError as e:
            return _failure(e, "phase-portrait")
        except (np.linalg.LinAlgError, FloatingPointError) as e:
            return _numerical_failure(e, "phase-portrait")
