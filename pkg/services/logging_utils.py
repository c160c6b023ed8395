"""
Logging setup and helpers shared by the CLI and the HTTP service.
"""
import logging
import traceback
from typing import Optional

LOG_FORMAT = '%(asctime)s | %(levelname)-8s | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

logger = logging.getLogger("kbgain")


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once; an explicit level always wins."""
    from config.environment import get_config

    level_name = (level or get_config().log_level).upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT, datefmt=DATE_FORMAT)
    logging.getLogger().setLevel(getattr(logging, level_name, logging.INFO))


def _extras(kwargs) -> str:
    return " | ".join(f"{k}: {v}" for k, v in kwargs.items()) if kwargs else ""


def log_startup(message: str) -> None:
    logger.info(f"🚀 {message}")


def log_shutdown(message: str) -> None:
    logger.info(f"🛑 {message}")


def log_api_request(endpoint: str, method: str = "", **kwargs) -> None:
    extra_info = _extras(kwargs)
    logger.info(f"📨 API {method} {endpoint}{' | ' + extra_info if extra_info else ''}")


def log_api_response(endpoint: str, status_code: int, duration_ms: Optional[float] = None, **kwargs) -> None:
    duration_info = f" | {duration_ms:.1f}ms" if duration_ms else ""
    extra_info = _extras(kwargs)
    status_emoji = "✅" if status_code < 400 else "❌"
    logger.info(f"{status_emoji} API {endpoint} → {status_code}{duration_info}{' | ' + extra_info if extra_info else ''}")


def log_command(command: str, **kwargs) -> None:
    extra_info = _extras(kwargs)
    logger.info(f"▶️ {command}{' | ' + extra_info if extra_info else ''}")


def log_error_with_context(error: Exception, context: str = "", **kwargs) -> None:
    context_info = f" | Context: {context}" if context else ""
    extra_info = _extras(kwargs)
    logger.error(f"💥 ERROR: {error}{context_info}{' | ' + extra_info if extra_info else ''}")
    logger.debug(f"🔍 Full traceback:\n{traceback.format_exc()}")
