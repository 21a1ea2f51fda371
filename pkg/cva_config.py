"""
Environment-based configuration loader
Reads CVA_* variables (a .env file in the working directory is honoured)
"""
import os
import sys
from dataclasses import asdict, dataclass
from typing import Dict, Optional

from dotenv import load_dotenv

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class CvaConfig:
    color: bool = False
    max_sigma: int = 3
    max_menu: int = 4
    max_context: int = 2
    strict_totality: bool = False
    reports_dir: str = "reports"
    log_level: str = "INFO"
    seed: int = 20121
    random_systems: int = 1000

    def to_dict(self) -> Dict:
        return asdict(self)


def _flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    if raw not in ("0", "1"):
        raise ValueError(f"Invalid configuration: {name} must be 0 or 1, got {raw!r}")
    return raw == "1"


def _count(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"Invalid configuration: {name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ValueError(f"Invalid configuration: {name} must be at least {minimum}, got {value}")
    return value


def load_config_from_env(dotenv_path: Optional[str] = None) -> CvaConfig:
    """
    Load the verifier configuration from environment variables

    Returns:
        CvaConfig: settings with defaults for every unset variable
    """
    load_dotenv(dotenv_path)

    log_level = os.getenv('CVA_LOG_LEVEL', 'INFO').upper()
    if log_level not in LOG_LEVELS:
        raise ValueError(f"Invalid configuration: CVA_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")

    return CvaConfig(
        color=_flag('CVA_COLOR', sys.stdout.isatty()),
        max_sigma=_count('CVA_MAX_SIGMA', 3, minimum=1),
        max_menu=_count('CVA_MAX_MENU', 4, minimum=1),
        max_context=_count('CVA_MAX_CONTEXT', 2),
        strict_totality=_flag('CVA_STRICT_TOTALITY', False),
        reports_dir=os.getenv('CVA_REPORTS_DIR', 'reports'),
        log_level=log_level,
        seed=_count('CVA_SEED', 20121),
        random_systems=_count('CVA_RANDOM_SYSTEMS', 1000, minimum=1),
    )
