"""
Centralized environment configuration for the channel-gain toolkit.
Handles environment variables with fallbacks for local runs and containers.
"""
import os
from pathlib import Path
from typing import Any, Dict

from config import settings


class KbGainConfig:
    """Centralized configuration management with environment variable fallbacks."""

    def __init__(self):
        self._load_environment_files()

    def _load_environment_files(self):
        """Load the repository .env file if python-dotenv is available."""
        try:
            from dotenv import load_dotenv

            root_env = Path(__file__).parent.parent / '.env'
            if root_env.exists():
                load_dotenv(root_env, override=False)  # Don't override existing env vars
        except ImportError:
            # dotenv not available, rely on system environment variables
            pass

    @property
    def log_level(self) -> str:
        """Get logging level."""
        return os.getenv('KBGAIN_LOG_LEVEL', 'INFO').upper()

    @property
    def output_dir(self) -> str:
        """Directory where CLI artifacts are written."""
        return os.getenv('KBGAIN_OUTPUT_DIR', './results')

    @property
    def max_workers(self) -> int:
        """Worker threads for Monte-Carlo blocks and experiment trials."""
        return int(os.getenv('KBGAIN_MAX_WORKERS', '1'))

    @property
    def sdp_tol(self) -> float:
        """Termination tolerance of the SDP splitting solver."""
        return float(os.getenv('KBGAIN_SDP_TOL', str(settings.SDP_TOL)))

    @property
    def sdp_max_iters(self) -> int:
        """Iteration cap of the SDP splitting solver."""
        return int(os.getenv('KBGAIN_SDP_MAX_ITERS', str(settings.SDP_MAX_ITERS)))

    @property
    def mc_block_size(self) -> int:
        """Monte-Carlo paths per random-stream block."""
        return int(os.getenv('KBGAIN_MC_BLOCK_SIZE', str(settings.MC_BLOCK_SIZE)))

    def validate_required_config(self) -> Dict[str, Any]:
        """
        Validate the configuration values.
        Returns a status dict with validation results.
        """
        status = {
            'valid': True,
            'missing': [],
            'warnings': [],
        }

        try:
            if self.max_workers < 1:
                status['valid'] = False
                status['missing'].append('KBGAIN_MAX_WORKERS must be >= 1')
            if self.sdp_tol <= 0:
                status['valid'] = False
                status['missing'].append('KBGAIN_SDP_TOL must be > 0')
        except ValueError as e:
            status['valid'] = False
            status['missing'].append(f'unparseable value: {e}')

        if self.log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            status['warnings'].append(f'unknown log level {self.log_level}, INFO assumed')

        if not Path(self.output_dir).exists():
            status['warnings'].append(f'output directory {self.output_dir} will be created')

        return status


# Global configuration instance
config = KbGainConfig()


def get_config() -> KbGainConfig:
    """Get the global configuration instance."""
    return config


if __name__ == "__main__":
    # Test configuration when run directly
    print("🔧 KbGain Configuration Test")
    print("=" * 50)

    validation = config.validate_required_config()

    print(f"✅ Configuration valid: {validation['valid']}")

    if validation['missing']:
        print(f"❌ Invalid config: {', '.join(validation['missing'])}")

    if validation['warnings']:
        print(f"⚠️  Warnings: {', '.join(validation['warnings'])}")

    print(f"📁 Output directory: {config.output_dir}")
    print(f"📊 Log level: {config.log_level}")
    print(f"🧵 Max workers: {config.max_workers}")
    print(f"📐 SDP tolerance: {config.sdp_tol:g} (max {config.sdp_max_iters} iterations)")
    print(f"🎲 Monte-Carlo block size: {config.mc_block_size}")
