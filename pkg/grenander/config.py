import logging
import os

from dotenv import load_dotenv

from .exceptions import ConfigurationError

load_dotenv()


def _env_int(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: str, low: float, high: float) -> float:
    raw = os.getenv(name, default)
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be a number, got {raw!r}")
    if not low < value < high:
        raise ConfigurationError(f"{name} must lie in ({low}, {high}), got {value}")
    return value


DEFAULT_SEED = _env_int("GRENANDER_SEED", "20240101")
DEFAULT_WORKERS = _env_int("GRENANDER_WORKERS", "1")
DEFAULT_PRECISION = _env_int("GRENANDER_PRECISION", "6")
TRUNCATION_LEVEL = _env_float("GRENANDER_TRUNCATION_LEVEL", "0.9", 0.0, 1.0)
FAILURE_WARN_RATE = _env_float("GRENANDER_FAILURE_WARN_RATE", "0.05", 0.0, 1.0)
LOG_LEVEL = os.getenv("GRENANDER_LOG_LEVEL", "WARNING").upper()

if DEFAULT_WORKERS < 1:
    raise ConfigurationError(f"GRENANDER_WORKERS must be positive, got {DEFAULT_WORKERS}")
if DEFAULT_PRECISION < 1:
    raise ConfigurationError(f"GRENANDER_PRECISION must be positive, got {DEFAULT_PRECISION}")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    """Install one stderr handler on the package logger."""
    name = (level or LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(name), int):
        raise ConfigurationError(f"unknown log level {name!r}")
    package_logger = logging.getLogger("grenander")
    package_logger.setLevel(name)
    if not package_logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package_logger.addHandler(handler)
