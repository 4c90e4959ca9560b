"""
Runtime settings read from the environment (and an optional .env file).
"""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# Load .env from the working directory, if any
load_dotenv()

LOG_ENV_VAR = "CHANKIT_LOG"
LOG_DIR_ENV_VAR = "CHANKIT_LOG_DIR"
JOBS_ENV_VAR = "CHANKIT_JOBS"

VALID_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


@dataclass(frozen=True)
class Settings:
    log_level: str = "WARNING"
    log_dir: Optional[str] = None
    jobs: int = 1


def get_settings() -> Settings:
    """Read settings from the environment, falling back to defaults."""
    level = os.getenv(LOG_ENV_VAR, "WARNING").strip().upper()
    if level not in VALID_LOG_LEVELS:
        level = "WARNING"

    log_dir = os.getenv(LOG_DIR_ENV_VAR) or None

    try:
        jobs = max(1, int(os.getenv(JOBS_ENV_VAR, "1")))
    except ValueError:
        jobs = 1

    return Settings(log_level=level, log_dir=log_dir, jobs=jobs)
