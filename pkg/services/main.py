"""
FastAPI application exposing the channel-gain toolkit over HTTP.
JSON in, JSON out; no files are written by the API.
"""
import time
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

# Load environment variables from .env file
load_dotenv()

from models.schemas import ProblemDocument

from .config import Config
from .gain_control_service import GainControlService
from .logging_utils import (
    configure_logging,
    log_api_request,
    log_api_response,
    log_error_with_context,
    log_shutdown,
    log_startup,
    logger,
)

configure_logging()

app = FastAPI(
    title="Kalman-Bucy Channel Gain API",
    description="Optimal channel-gain design for minimum-information Kalman-Bucy filtering",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=Config.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)

service = GainControlService()


class ClassifyRequest(BaseModel):
    """Scalar case classification request."""
    a: float = Field(..., description="Scalar drift (< 0)")
    alpha: float = Field(..., description="Weight of the information cost")
    gamma: float = Field(..., description="Gain bound")


class StationaryRequest(BaseModel):
    """Stationary gain design request."""
    problem: ProblemDocument
    tol: Optional[float] = Field(None, description="Solver tolerance")
    max_iters: Optional[int] = Field(None, description="Solver iteration cap")


class RiccatiRequest(BaseModel):
    """Riccati flow evaluation of the problem's schedule."""
    problem: ProblemDocument
    dt: Optional[float] = Field(None, description="Target step")


def _dimension_guard(problem: ProblemDocument) -> None:
    n = len(problem.A) if isinstance(problem.A, list) else 1
    if n > Config.MAX_DIMENSION:
        raise HTTPException(
            status_code=422,
            detail={"error": "dimension_limit", "message": f"n = {n} exceeds the API limit {Config.MAX_DIMENSION}", "details": {}},
        )


def _respond(endpoint: str, start_time: float, outcome) -> Dict[str, Any]:
    success, payload, message = outcome
    duration_ms = (time.time() - start_time) * 1000
    if not success:
        log_api_response(endpoint, 422, duration_ms, error=payload.get("error"))
        raise HTTPException(status_code=422, detail=payload)
    log_api_response(endpoint, 200, duration_ms, result=message)
    return payload


@app.on_event("startup")
async def startup_event():
    log_startup("Kalman-Bucy channel gain API")
    problems = Config.validate_required_env_vars()
    if problems:
        logger.warning(f"⚠️ Invalid service settings: {', '.join(problems)}")


@app.on_event("shutdown")
async def shutdown_event():
    log_shutdown("Kalman-Bucy channel gain API")


@app.get("/ping")
async def ping():
    """Simple ping endpoint for load balancer health checks."""
    return {"status": "ok", "timestamp": datetime.now(timezone.utc).isoformat()}


@app.get("/health")
async def health_check():
    """Health check endpoint."""
    problems = Config.validate_required_env_vars()
    return {
        "status": "healthy" if not problems else "degraded",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config_problems": problems,
    }


@app.post("/classify")
async def classify(request: ClassifyRequest):
    start_time = time.time()
    log_api_request("/classify", "POST", a=request.a, alpha=request.alpha, gamma=request.gamma)
    try:
        return _respond("/classify", start_time, service.classify(request.a, request.alpha, request.gamma))
    except HTTPException:
        raise
    except Exception as e:
        log_error_with_context(e, "/classify endpoint")
        raise HTTPException(status_code=500, detail=f"Classification failed: {str(e)}")


@app.post("/solve-scalar")
async def solve_scalar(problem: ProblemDocument):
    start_time = time.time()
    log_api_request("/solve-scalar", "POST")
    try:
        return _respond("/solve-scalar", start_time, service.solve_scalar(problem, emit_csv=False))
    except HTTPException:
        raise
    except Exception as e:
        log_error_with_context(e, "/solve-scalar endpoint")
        raise HTTPException(status_code=500, detail=f"Scalar solve failed: {str(e)}")


@app.post("/solve-stationary")
async def solve_stationary(request: StationaryRequest):
    start_time = time.time()
    log_api_request("/solve-stationary", "POST", tol=request.tol)
    _dimension_guard(request.problem)
    max_iters = min(request.max_iters or Config.MAX_SDP_ITERS, Config.MAX_SDP_ITERS)
    try:
        outcome = service.solve_stationary(request.problem, tol=request.tol, max_iters=max_iters, emit_csv=False)
        return _respond("/solve-stationary", start_time, outcome)
    except HTTPException:
        raise
    except Exception as e:
        log_error_with_context(e, "/solve-stationary endpoint")
        raise HTTPException(status_code=500, detail=f"Stationary solve failed: {str(e)}")


@app.post("/riccati")
async def riccati(request: RiccatiRequest):
    start_time = time.time()
    log_api_request("/riccati", "POST", dt=request.dt)
    _dimension_guard(request.problem)
    try:
        return _respond("/riccati", start_time, service.riccati(request.problem, dt=request.dt, emit_csv=False))
    except HTTPException:
        raise
    except Exception as e:
        log_error_with_context(e, "/riccati endpoint")
        raise HTTPException(status_code=500, detail=f"Riccati evaluation failed: {str(e)}")


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host=Config.API_HOST, port=Config.API_PORT, log_level="info")
