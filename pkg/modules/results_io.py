# modules/results_io.py
"""
Results IO - metrics.json and the per-figure CSV files.

metrics.json is nested experiment -> model -> metric -> {seeds, mean} and carries no
timestamps, so identical configs produce identical bytes.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import MetricsTable


CSV_HEADERS: dict[str, list[str]] = {
    "rollouts": ["model", "seed", "horizon", "cleanup", "accuracy"],
    "zero_shot_sweep": ["model", "ratio", "seed", "accuracy", "accuracy_clean"],
    "robustness": ["model", "sigma", "seed", "accuracy"],
    "ablation": ["family", "setting", "sigma", "seed", "accuracy"],
    "kernel_profile": ["seed", "action", "k", "similarity", "n_states"],
    "benchmark": ["model", "parameters", "ms_step", "ms_step_clean"],
    "rollout_trials": ["trial", "horizon", "cleanup_period", "final_correct", "steps_correct"],
}


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(list(header))
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row {row!r} does not match header {list(header)}")
            writer.writerow([_cell(v) for v in row])
    return path


def write_figure_csv(output_dir: Path, name: str, rows: Iterable[Sequence]) -> Path:
    if name not in CSV_HEADERS:
        raise KeyError(f"Unknown result table '{name}'; expected one of {sorted(CSV_HEADERS)}")
    return write_csv(Path(output_dir) / f"{name}.csv", CSV_HEADERS[name], rows)


def rollout_trial_rows(horizon: int, period, results) -> list[list]:
    """Per-trial rows for a batch of RolloutResults; period 0 means no cleanup."""
    return [
        [i, horizon, period or 0, r.final_correct, r.steps_correct]
        for i, r in enumerate(results)
    ]


def read_csv_rows(path: Path) -> list[dict[str, str]]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


@dataclass
class MetricsStore:
    """experiment -> model -> MetricsTable."""
    tables: dict[str, dict[str, MetricsTable]] = field(default_factory=dict)

    def table(self, experiment: str, model: str) -> MetricsTable:
        return self.tables.setdefault(experiment, {}).setdefault(model, MetricsTable())

    def record(self, experiment: str, model: str, seed: int, metrics: dict[str, float]) -> None:
        self.table(experiment, model).update(seed, metrics)

    def to_dict(self) -> dict:
        return {
            experiment: {model: t.to_dict() for model, t in sorted(models.items())}
            for experiment, models in sorted(self.tables.items())
        }

    def write_json(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path
