#!/usr/bin/env python3
"""
Command-line front door for the channel-gain toolkit.

Reads a problem JSON document, runs one command and writes
``<out>/result.json`` plus the command's CSV series next to it.

Exit codes:
    0  success
    1  domain error (result.json holds the error document)
    2  usage error or missing input file

Examples:
    python cli.py classify --a -0.595 --gamma 1 --alpha 0.476
    python cli.py solve-stationary problem.json --out runs/a
    python cli.py simulate --input problem.json --paths 10000 --dt 1e-3 --seed 7
    python cli.py experiment --n 15 --alpha 0.01 --gamma 100 --trials 100
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

load_dotenv()

from config.environment import get_config
from models.errors import KbGainError
from models.schemas import ErrorResult, ProblemDocument, load_document
from services.gain_control_service import GainControlService, ServiceResult
from services.logging_utils import configure_logging, log_command, log_error_with_context, logger

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2

DOCUMENT_COMMANDS = (
    "solve-scalar",
    "solve-stationary",
    "verify-pmp",
    "simulate",
    "riccati",
    "phase-portrait",
    "alpha-sweep",
)
COMMANDS = ("classify", "experiment") + DOCUMENT_COMMANDS


def parse_alphas(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("at least one alpha is required")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbgain",
        description="Channel-gain design for minimum-information Kalman-Bucy filtering",
    )
    parser.add_argument("command", choices=COMMANDS, help="operation to run")
    parser.add_argument("input_file", nargs="?", help="problem JSON (same as --input)")
    parser.add_argument("--input", dest="input_flag", help="problem JSON document")
    parser.add_argument("--out", default=None, help="output directory (default: KBGAIN_OUTPUT_DIR)")
    parser.add_argument("--dt", type=float, default=None, help="integration step")
    parser.add_argument("--tol", type=float, default=None, help="solver tolerance")
    parser.add_argument("--max-iters", type=int, default=None, help="SDP iteration cap")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--trials", type=int, default=100, help="number of random systems (experiment)")
    parser.add_argument("--n", type=int, default=2, help="state dimension (experiment)")
    parser.add_argument("--paths", type=int, default=10000, help="Monte-Carlo paths (simulate)")
    parser.add_argument("--a", type=float, default=None, help="scalar drift (classify)")
    parser.add_argument("--alpha", type=float, default=None, help="information weight; overrides the document")
    parser.add_argument("--gamma", type=float, default=None, help="gain bound; overrides the document")
    parser.add_argument("--alphas", type=parse_alphas, default=None, help="comma-separated alphas (alpha-sweep)")
    parser.add_argument("--emit-paths", action="store_true", help="write per-path CSV (simulate)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--workers", type=int, default=None, help="worker threads")
    return parser


def write_result(out_dir: Path, payload: Dict[str, Any]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "result.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _with_overrides(document: ProblemDocument, args: argparse.Namespace) -> ProblemDocument:
    update = {k: v for k, v in (("alpha", args.alpha), ("gamma", args.gamma)) if v is not None}
    if not update:
        return document
    return ProblemDocument.model_validate({**document.model_dump(), **update})


def dispatch(service: GainControlService, args: argparse.Namespace, document: Optional[ProblemDocument]) -> ServiceResult:
    command = args.command
    if command == "classify":
        return service.classify(args.a, args.alpha, args.gamma)
    if command == "experiment":
        alpha = args.alpha if args.alpha is not None else 0.01
        gamma = args.gamma if args.gamma is not None else 100.0
        return service.experiment(args.n, alpha, gamma, args.trials, args.seed, tol=args.tol, max_iters=args.max_iters)
    if command == "solve-scalar":
        return service.solve_scalar(document)
    if command == "solve-stationary":
        return service.solve_stationary(document, tol=args.tol, max_iters=args.max_iters)
    if command == "verify-pmp":
        return service.verify_pmp(document, dt=args.dt)
    if command == "simulate":
        dt = args.dt if args.dt is not None else 1e-3
        return service.simulate(document, args.paths, dt, args.seed, emit_paths=args.emit_paths)
    if command == "riccati":
        return service.riccati(document, dt=args.dt)
    if command == "phase-portrait":
        return service.phase_portrait(document)
    alphas = args.alphas or [document.alpha]
    return service.alpha_sweep(document, alphas, tol=args.tol, max_iters=args.max_iters)


def _internal_error(out_dir: Path, error: Exception, command: str) -> int:
    log_error_with_context(error, command)
    document = ErrorResult(
        error="internal_error",
        message=f"{type(error).__name__}: {error}",
        details={"command": command},
    )
    write_result(out_dir, document.model_dump())
    return EXIT_DOMAIN_ERROR


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: argument list without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    out_dir = Path(args.out or get_config().output_dir)

    if args.input_file and args.input_flag and args.input_file != args.input_flag:
        parser.error("give the problem file either positionally or with --input, not both")
    input_path = args.input_flag or args.input_file

    if args.command == "classify" and (args.a is None or args.alpha is None or args.gamma is None):
        parser.error("classify requires --a, --alpha and --gamma")
    if args.command in DOCUMENT_COMMANDS and not input_path:
        parser.error(f"{args.command} requires a problem file")

    log_command(args.command, input=input_path, out=str(out_dir))

    document = None
    if args.command in DOCUMENT_COMMANDS:
        try:
            document = _with_overrides(load_document(input_path), args)
        except FileNotFoundError as e:
            logger.error(f"❌ {e}")
            write_result(out_dir, ErrorResult(error="file_not_found", message=str(e)).model_dump())
            return EXIT_USAGE
        except KbGainError as e:
            logger.error(f"❌ {e.code}: {e.message}")
            write_result(out_dir, e.to_dict())
            return EXIT_DOMAIN_ERROR
        except Exception as e:
            return _internal_error(out_dir, e, args.command)

    service = GainControlService(output_dir=str(out_dir), max_workers=args.workers)
    try:
        success, payload, message = dispatch(service, args, document)
    except Exception as e:
        return _internal_error(out_dir, e, args.command)
    path = write_result(out_dir, payload)
    if not success:
        logger.error(f"❌ {args.command}: {message}")
        return EXIT_DOMAIN_ERROR
    logger.info(f"✅ {args.command}: {message} | result: {path}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
