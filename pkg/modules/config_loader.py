# modules/config_loader.py
"""
Config Loader - Load, cache and validate experiment YAML files.
"""
import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import ValidationError

from .experiment_models import ExperimentConfig


CONFIG_BASE = Path(__file__).parent.parent / "config"
EXPERIMENTS_BASE = CONFIG_BASE / "experiments"

THREADS_ENV = "HOLOWORLD_THREADS"
OUTPUT_DIR_ENV = "HOLOWORLD_OUTPUT_DIR"
LOG_LEVEL_ENV = "HOLOWORLD_LOG_LEVEL"


class ConfigError(ValueError):
    """Invalid experiment config; `key` names the offending entry when known."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


def list_configs() -> list[str]:
    """Names of the bundled experiment configs."""
    if not EXPERIMENTS_BASE.exists():
        return []
    return sorted(p.stem for p in EXPERIMENTS_BASE.glob("*.yaml"))


def resolve_config_path(name_or_path: str) -> Path:
    """A filesystem path, or the name of a bundled config under config/experiments/."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = EXPERIMENTS_BASE / f"{name_or_path}.yaml"
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"Config not found: {name_or_path}")


@lru_cache(maxsize=16)
def load_yaml_file(file_path: str) -> dict:
    """Load and cache a YAML file."""
    with open(file_path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Top level of {file_path} must be a mapping, got {type(data).__name__}")
    return data


def _first_error_key(exc: ValidationError) -> Optional[str]:
    for err in exc.errors():
        if err.get("loc"):
            return ".".join(str(part) for part in err["loc"])
    return None


def parse_config(data: dict[str, Any], source: str = "<dict>") -> ExperimentConfig:
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"{first['msg']} (in {source})", key=_first_error_key(e)) from e


def load_config(
    name_or_path: str,
    overrides: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Load an experiment config.

    Precedence: explicit overrides, then HOLOWORLD_OUTPUT_DIR, then the file.
    """
    path = resolve_config_path(name_or_path)
    try:
        data = dict(load_yaml_file(str(path.resolve())))
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML parse error in {path}: {e}") from e

    env_output = os.environ.get(OUTPUT_DIR_ENV)
    if env_output:
        data["output_dir"] = env_output
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return parse_config(data, source=str(path))


def thread_count() -> int:
    """Evaluation parallelism from HOLOWORLD_THREADS; unset or invalid means 1."""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        logging.getLogger("holoworld.config").warning(f"Ignoring invalid {THREADS_ENV}={raw!r}")
        return 1


def log_level() -> int:
    name = os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    return getattr(logging, name, logging.INFO)
