from __future__ import annotations

import os
from pathlib import Path

from dotenv import load_dotenv

from src.errors import ConfigError

load_dotenv()

BASE_DIR = Path(__file__).resolve().parents[1]

DATA_DIR = BASE_DIR / "data"
MODELS_DIR = DATA_DIR / "models"
REPORTS_DIR = DATA_DIR / "reports"
TRACES_DIR = DATA_DIR / "traces"

CASE_STUDY_JSON = MODELS_DIR / "agc.json"
CASE_STUDY_PRIO_JSON = MODELS_DIR / "agc_prio7to8.json"


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


# bad settings fall back to the default here and are reported by check_env()
ENV_ERRORS: list[str] = []


def _setting(name: str, default: int, minimum: int = 1) -> int:
    try:
        return _env_int(name, default, minimum)
    except ConfigError as e:
        ENV_ERRORS.append(str(e))
        return default


def check_env():
    if ENV_ERRORS:
        raise ConfigError("; ".join(ENV_ERRORS))


MAX_BUSY_INSTANCES = _setting("RTA_MAX_BUSY_INSTANCES", 4096)
WINDOW_CAP = _setting("RTA_WINDOW_CAP", 2 ** 24)

DEFAULT_SEED = _setting("RTA_SEED", 0, minimum=0)
CHECK_RUNS = _setting("RTA_CHECK_RUNS", 20)
JOBS = _setting("RTA_JOBS", 1)

for p in [REPORTS_DIR, TRACES_DIR]:
    p.mkdir(parents=True, exist_ok=True)
