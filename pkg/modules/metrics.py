# modules/metrics.py
"""
Metrics - One-step, rollout and composition evaluation over any WorldModel.

Accuracies are percentages; mean cosine similarity is reported x100 so both share
one scale.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import CleanupPolicy, RolloutResult
from .gridworld import Action, GridSpec, Trajectory, Transition, sample_trials, step
from .training import _batch_indices
from .world_model import WorldModel, batch_rollout


@dataclass
class MetricsTable:
    """metric -> seed -> value, with means computed on demand."""
    values: dict[str, dict[int, float]] = field(default_factory=dict)

    def record(self, metric: str, seed: int, value: float) -> None:
        self.values.setdefault(metric, {})[int(seed)] = float(value)

    def update(self, seed: int, metrics: dict[str, float]) -> None:
        for name, value in metrics.items():
            self.record(name, seed, value)

    def mean(self, metric: str) -> float:
        per_seed = self.values.get(metric)
        if not per_seed:
            raise KeyError(f"No values recorded for metric '{metric}'")
        return float(np.mean(list(per_seed.values())))

    def metrics(self) -> list[str]:
        return sorted(self.values)

    def to_dict(self) -> dict:
        return {
            name: {
                "seeds": {str(s): v for s, v in sorted(self.values[name].items())},
                "mean": self.mean(name),
            }
            for name in self.metrics()
        }


@dataclass
class OneStepMetrics:
    accuracy: float
    cosine: float
    n: int

    def to_dict(self, prefix: str = "") -> dict[str, float]:
        return {f"{prefix}accuracy": self.accuracy, f"{prefix}cosine": self.cosine}


def _require_model(model: Optional[WorldModel]) -> WorldModel:
    if model is None:
        raise ValueError("Evaluation needs a trained model")
    return model


def eval_one_step(
    model: WorldModel,
    transitions: Sequence[Transition],
    sigma: float = 0.0,
    seed: int = 0,
) -> OneStepMetrics:
    """
    Decoded accuracy and mean similarity of tau(phi(s), a) against phi(s').

    With sigma > 0, Gaussian noise is added to each prediction before decoding.
    """
    model = _require_model(model)
    if not transitions:
        raise ValueError("Evaluation needs at least one transition")
    if sigma < 0:
        raise ValueError(f"Noise sigma must be >= 0, got {sigma}")
    s, a, sn = _batch_indices(transitions)
    z = model.transition(model.embed(s), a)
    if sigma > 0:
        z = model.perturb(z, sigma, np.random.default_rng([seed, int(round(sigma * 1000))]))
    idx, _ = model.decode(z)
    accuracy = 100.0 * float(np.mean(idx == sn))
    cosine = 100.0 * float(np.mean(model.score(z, sn)))
    return OneStepMetrics(accuracy, cosine, len(transitions))


def shared_trials(g: GridSpec, horizon: int, trials: int, seed: int) -> list[Trajectory]:
    """The trial set every model sees for (horizon, seed)."""
    return sample_trials(g, horizon, trials, seed=seed)


def eval_rollouts(
    model: WorldModel,
    g: GridSpec,
    horizons: Sequence[int],
    cleanup_period: int = 2,
    trials: int = 500,
    seed: int = 0,
    threads: int = 1,
    sink: Optional[Callable[[int, Optional[int], list[RolloutResult]], None]] = None,
) -> dict[str, float]:
    """
    Final-state accuracy per horizon, with and without cleanup.

    `sink(horizon, period, results)` receives every trial batch; period is None without cleanup.
    """
    model = _require_model(model)
    out: dict[str, float] = {}
    for horizon in horizons:
        if horizon < 1:
            raise ValueError(f"Rollout horizon must be >= 1, got {horizon}")
        trial_set = shared_trials(g, horizon, trials, seed)
        for label, policy in (("", CleanupPolicy.disabled()), ("_clean", CleanupPolicy(cleanup_period))):
            results = batch_rollout(model, trial_set, policy, threads=threads)
            if sink is not None:
                sink(horizon, policy.period, results)
            out[f"rollout_{horizon}{label}"] = 100.0 * float(np.mean([r.final_correct for r in results]))
    return out


def composition_accuracy(model: WorldModel, g: GridSpec) -> float:
    """Decoded accuracy of every two-action composition applied to interior states."""
    model = _require_model(model)
    starts, first, second, truth = [], [], [], []
    for s in g.interior_states():
        for a1 in Action:
            for a2 in Action:
                starts.append(s)
                first.append(int(a1))
                second.append(int(a2))
                truth.append(step(g, step(g, s, a1), a2))
    if not starts:
        raise ValueError(f"{g.rows}x{g.cols} grid has no interior states")
    z = model.transition(model.transition(model.embed(starts), np.array(first)), np.array(second))
    idx, _ = model.decode(z)
    return 100.0 * float(np.mean(idx == np.array(truth)))
