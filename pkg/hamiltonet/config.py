"""
Configuration Module - Loads environment variables for output locations and workers
"""
import logging
import os
from pathlib import Path

from dotenv import load_dotenv

from hamiltonet.error_utils import ConfigError

# Load environment variables from .env file in the working directory
env_path = Path.cwd() / '.env'
load_dotenv(dotenv_path=env_path)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Config:
    """Application configuration read from environment variables at call time"""

    DEFAULT_OUTPUT_ROOT = "runs"
    DEFAULT_LOG_LEVEL = "INFO"
    DEFAULT_N_JOBS = 1

    @classmethod
    def output_root(cls) -> Path:
        """Root directory for command outputs"""
        return Path(os.getenv('HAMILTONET_OUTPUT_ROOT', cls.DEFAULT_OUTPUT_ROOT))

    @classmethod
    def log_level(cls) -> str:
        return os.getenv('HAMILTONET_LOG_LEVEL', cls.DEFAULT_LOG_LEVEL).upper()

    @classmethod
    def n_jobs(cls) -> int:
        """Default worker count for restarts and rollouts"""
        raw = os.getenv('HAMILTONET_N_JOBS', str(cls.DEFAULT_N_JOBS))
        try:
            return int(raw)
        except ValueError:
            raise ConfigError('HAMILTONET_N_JOBS', f"expected an integer, got '{raw}'")

    @classmethod
    def validate(cls) -> bool:
        """Validate environment values"""
        if cls.log_level() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ConfigError('HAMILTONET_LOG_LEVEL', f"unknown level '{cls.log_level()}'")
        if cls.n_jobs() == 0:
            raise ConfigError('HAMILTONET_N_JOBS', "must be non-zero")
        return True

    @classmethod
    def configure_logging(cls, verbose: bool = False) -> None:
        level = logging.DEBUG if verbose else getattr(logging, cls.log_level(), logging.INFO)
        logging.basicConfig(level=level, format=LOG_FORMAT)

