"""Application settings and configuration management."""

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Get the project root directory (parent of config directory)
PROJECT_ROOT = Path(__file__).parent.parent

# Load environment variables from .env file in project root
env_path = PROJECT_ROOT / '.env'
if env_path.exists():
    load_dotenv(dotenv_path=env_path)
else:
    # Try loading from current directory as fallback
    load_dotenv()

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class Settings:
    """Environment-level defaults shared by every command."""

    def __init__(self):
        self._load_env_vars()

    def _load_env_vars(self):
        """Load environment variables."""
        output_dir = os.getenv('OCTMIX_OUTPUT_DIR', '').strip()
        self.output_dir: Optional[Path] = Path(output_dir) if output_dir else None
        self.log_level = os.getenv('OCTMIX_LOG_LEVEL', 'INFO').strip().upper()
        self.workers_raw = os.getenv('OCTMIX_WORKERS', '1').strip()
        try:
            self.workers = int(self.workers_raw)
        except ValueError:
            self.workers = 1

    def reload(self):
        """Re-read the environment (tests and long-lived callers)."""
        self._load_env_vars()

    def validate_required_settings(self) -> tuple[bool, list[str]]:
        """Validate the environment-provided settings."""
        errors = []
        if self.log_level not in LOG_LEVELS:
            errors.append(f"OCTMIX_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got '{self.log_level}'")
        if not self.workers_raw.isdigit() or int(self.workers_raw) < 1:
            errors.append(f"OCTMIX_WORKERS must be a positive integer, got '{self.workers_raw}'")
        return len(errors) == 0, errors

    @property
    def logging_level(self) -> int:
        return getattr(logging, self.log_level, logging.INFO)


# Global settings instance
settings = Settings()
