"""
Numerical settings for the channel-gain toolkit.
Defaults can be overridden from the environment (or a .env file).
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value else default


# Model validation
HURWITZ_MARGIN = _env_float("KBGAIN_HURWITZ_MARGIN", 1e-9)
RANK_TOL = _env_float("KBGAIN_RANK_TOL", 1e-12)
PSD_TOL = _env_float("KBGAIN_PSD_TOL", 1e-9)

# Matrix operations
SQRT_CLIP_TOL = 1e-7
ARE_MAX_ITERS = 200
ARE_REL_TOL = 1e-12

# Riccati flow
DEFAULT_DT_DIVISIONS = _env_int("KBGAIN_DT_DIVISIONS", 4096)
NEGATIVE_COV_TOL = 1e-6
MAX_STEP_HALVINGS = 6

# Minimum principle
SINGULAR_BAND = 1e-9

# Scalar synthesis
ROOT_SAMPLES = 1024
ROOT_XTOL = 1e-14
ORACLE_MIN_RESOLUTION = 64

# Stationary SDP
SDP_TOL = _env_float("KBGAIN_SDP_TOL", 1e-9)
SDP_MAX_ITERS = _env_int("KBGAIN_SDP_MAX_ITERS", 50000)
SDP_RELAXATION = 1.6
SDP_RHO_INIT = 1.0
SDP_RHO_BOUNDS = (1e-6, 1e6)
# rho is rebalanced when primal and dual residuals drift apart by this factor
SDP_ADAPT_RATIO = 5.0
SDP_ADAPT_EVERY = 50
SDP_CHECK_EVERY = 10
SDP_SCALING_PASSES = 10
SDP_SCALE_BOUNDS = (1e-4, 1e4)
# warm-started re-solves at a tighter tolerance when a run is not certified
SDP_POLISH_ROUNDS = 2
SDP_POLISH_FACTOR = 1e-2
SDP_POLISH_FLOOR = 1e-13
RANK_EXACT_TOL = 1e-6
RANDOM_SYSTEM_MARGIN = 0.1

# Monte-Carlo
MC_BLOCK_SIZE = _env_int("KBGAIN_MC_BLOCK_SIZE", 1024)
Z_SCORE_LIMIT = 3.0
# steps of noise drawn per path generator call; part of the seed contract
MC_STEP_CHUNK = 256
