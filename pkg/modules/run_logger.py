# modules/run_logger.py
"""
Run Logger - run.log handler, lifecycle events and the run manifest.
"""
import hashlib
import json
import logging
import subprocess
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from .config_loader import log_level


LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
ROOT_LOGGER = "holoworld"


def version_string() -> str:
    """`git describe --tags --always --dirty` when inside a checkout, else the package version."""
    from . import __version__

    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    described = out.stdout.strip()
    return described if out.returncode == 0 and described else __version__


def config_digest(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    """Everything needed to reproduce a run. Timestamps live here and nowhere else."""
    run_id: str
    command: str
    config: dict
    config_sha256: str
    seeds: list[int]
    version: str
    started_at: str
    finished_at: Optional[str] = None
    duration_ms: Optional[int] = None
    success: Optional[bool] = None
    error: Optional[str] = None
    artifacts: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class RunLogger:
    """Attaches a run.log FileHandler to the holoworld logger tree for one run."""

    def __init__(self, output_dir: Path, command: str):
        self.output_dir = Path(output_dir)
        self.command = command
        self.run_id = str(uuid.uuid4())
        self.logger = logging.getLogger(f"{ROOT_LOGGER}.run")
        self._root = logging.getLogger(ROOT_LOGGER)
        self._handler: Optional[logging.Handler] = None

    def __enter__(self) -> "RunLogger":
        self.open()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def open(self) -> None:
        if self._handler is not None:
            return
        self.output_dir.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(self.output_dir / "run.log", encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        self._root.addHandler(handler)
        self._root.setLevel(log_level())
        self._handler = handler

    def close(self) -> None:
        if self._handler is None:
            return
        self._root.removeHandler(self._handler)
        self._handler.close()
        self._handler = None

    # ------------------------------------------------------------------------
    # Lifecycle events
    # ------------------------------------------------------------------------

    def log_run_start(self, config: dict) -> None:
        self.logger.info(
            f"Run started - run_id={self.run_id} command={self.command} "
            f"models={config.get('models')} seeds={config.get('seeds')}"
        )

    def log_experiment_start(self, name: str, **details: Any) -> None:
        extra = " ".join(f"{k}={v}" for k, v in details.items())
        self.logger.info(f"Experiment started - run_id={self.run_id} experiment={name} {extra}".rstrip())

    def log_experiment_complete(self, name: str, duration_ms: int) -> None:
        self.logger.info(f"Experiment complete - run_id={self.run_id} experiment={name} duration_ms={duration_ms}")

    def log_run_complete(self, duration_ms: int, artifacts: list[str]) -> None:
        self.logger.info(
            f"Run complete - run_id={self.run_id} artifacts={len(artifacts)} duration_ms={duration_ms}"
        )

    def log_run_error(self, error: Exception) -> None:
        self.logger.error(f"Run failed - run_id={self.run_id} error={type(error).__name__}: {error}")

    # ------------------------------------------------------------------------
    # Manifest
    # ------------------------------------------------------------------------

    def create_manifest(self, config: dict, seeds: list[int]) -> RunManifest:
        return RunManifest(
            run_id=self.run_id,
            command=self.command,
            config=config,
            config_sha256=config_digest(config),
            seeds=list(seeds),
            version=version_string(),
            started_at=utc_now(),
        )

    def save_manifest(self, manifest: RunManifest) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest.to_dict(), f, indent=2, ensure_ascii=False, default=str)
        return path
