"""
Configuration for the HTTP service.
Class-level settings read from the environment at import time.
"""
import os
from typing import List


class Config:
    """HTTP service configuration."""

    # API settings
    API_HOST: str = os.getenv('KBGAIN_API_HOST', '0.0.0.0')
    API_PORT: int = int(os.getenv('KBGAIN_API_PORT', '8000'))

    # CORS settings
    CORS_ORIGINS: List[str] = os.getenv('KBGAIN_CORS_ORIGINS', '*').split(',')

    # Request limits
    MAX_DIMENSION: int = int(os.getenv('KBGAIN_MAX_DIMENSION', '20'))
    MAX_SDP_ITERS: int = int(os.getenv('KBGAIN_API_MAX_SDP_ITERS', '50000'))

    @classmethod
    def validate_required_env_vars(cls) -> list:
        """
        Check the service settings.

        Returns:
            List of problems found (empty when the configuration is usable)
        """
        problems = []
        if not 0 < cls.API_PORT < 65536:
            problems.append('KBGAIN_API_PORT')
        if cls.MAX_DIMENSION < 1:
            problems.append('KBGAIN_MAX_DIMENSION')
        return problems
