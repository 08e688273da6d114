# modules/harness.py
"""
Harness - Entry point that loads a config, runs one experiment and writes the artifacts.
"""
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config_loader import ConfigError, load_config, thread_count
from .experiments import COMMANDS, RunContext
from .run_logger import RunLogger, utc_now


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunOptions:
    """Overrides applied on top of the config file."""
    command: Optional[str] = None
    output_dir: Optional[Path] = None
    threads: Optional[int] = None


@dataclass
class RunResult:
    success: bool
    exit_code: int = EXIT_FAILED
    command: Optional[str] = None
    output_dir: Optional[Path] = None
    metrics_file: Optional[Path] = None
    manifest_file: Optional[Path] = None
    run_id: Optional[str] = None
    artifacts: list[Path] = field(default_factory=list)
    error: Optional[str] = None
    duration_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "exit_code": self.exit_code,
            "command": self.command,
            "output_dir": str(self.output_dir) if self.output_dir else None,
            "metrics_file": str(self.metrics_file) if self.metrics_file else None,
            "manifest_file": str(self.manifest_file) if self.manifest_file else None,
            "run_id": self.run_id,
            "artifacts": [str(p) for p in self.artifacts],
            "error": self.error,
            "duration_ms": self.duration_ms,
        }


def execute(config_path: str, options: Optional[RunOptions] = None) -> RunResult:
    """
    Run the experiment a config selects.

    Never raises: config and missing-file problems give exit code 2, anything else 1.
    """
    options = options or RunOptions()
    start_time = time.time()
    result = RunResult(success=False, command=options.command)

    try:
        overrides = {"experiment": options.command}
        if options.output_dir is not None:
            overrides["output_dir"] = str(options.output_dir)
        cfg = load_config(config_path, overrides)
    except ConfigError as e:
        result.exit_code = EXIT_CONFIG
        result.error = f"Invalid config: {e}"
        result.duration_ms = int((time.time() - start_time) * 1000)
        return result
    except FileNotFoundError as e:
        result.exit_code = EXIT_CONFIG
        result.error = f"Config not found: {e}"
        result.duration_ms = int((time.time() - start_time) * 1000)
        return result

    result.command = cfg.experiment
    result.output_dir = Path(cfg.output_dir)
    config_dict = cfg.model_dump(mode="json")
    run_logger = RunLogger(result.output_dir, cfg.experiment)
    result.run_id = run_logger.run_id

    with run_logger:
        manifest = run_logger.create_manifest(config_dict, cfg.seeds)
        ctx = RunContext(cfg, result.output_dir, threads=options.threads or thread_count())
        try:
            run_logger.log_run_start(config_dict)
            run_logger.log_experiment_start(cfg.experiment, threads=ctx.threads)
            COMMANDS[cfg.experiment](ctx)
            run_logger.log_experiment_complete(cfg.experiment, int((time.time() - start_time) * 1000))

            result.metrics_file = ctx.store.write_json(result.output_dir / "metrics.json")
            ctx.add(result.metrics_file)
            result.success = True
            result.exit_code = EXIT_OK
        except Exception as e:
            result.error = f"Experiment failed: {e}"
            result.exit_code = EXIT_FAILED
            run_logger.log_run_error(e)

        result.artifacts = list(ctx.artifacts)
        result.duration_ms = int((time.time() - start_time) * 1000)
        manifest.finished_at = utc_now()
        manifest.duration_ms = result.duration_ms
        manifest.success = result.success
        manifest.error = result.error
        manifest.artifacts = [str(p) for p in result.artifacts]
        result.manifest_file = run_logger.save_manifest(manifest)
        if result.success:
            run_logger.log_run_complete(result.duration_ms, manifest.artifacts)

    return result


def run(config_path: str, command: Optional[str] = None, output_dir: Optional[Path] = None) -> int:
    """Exit code for a run; artifacts land in the configured output directory."""
    return execute(config_path, RunOptions(command=command, output_dir=output_dir)).exit_code
