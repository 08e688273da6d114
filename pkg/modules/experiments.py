# modules/experiments.py
"""
Experiments - Training by model kind, sweeps, kernel profiles, exports and timing.

Each `run_*` function implements one CLI subcommand against a RunContext: it records
metrics in the context's store and writes its CSV artifacts into the output directory.
"""
import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np

from .baseline_mlp import MlpModel, MlpWorldModel, mlp_train, save_mlp_checkpoint
from .dynamics import similarity_profile
from .encoder import ActionEncoder, StateEncoder, save_checkpoint
from .experiment_models import ExperimentConfig
from .gridworld import Action, DatasetSplit, GridSpec, enumerate_transitions, zero_shot_split
from .hrr_model import HrrEncoders, HrrWorldModel, save_hrr_checkpoint, train_hrr
from .metrics import composition_accuracy, eval_one_step, eval_rollouts
from .results_io import CSV_HEADERS, MetricsStore, rollout_trial_rows, write_csv, write_figure_csv
from .training import LossReport, LossWeights, equivariance_score, homomorphism_score, train
from .world_model import FhrrWorldModel, WorldModel


logger = logging.getLogger("holoworld.experiments")

BENCH_WARMUP = 10


# ============================================================================
# Training by kind
# ============================================================================

@dataclass
class TrainedModel:
    kind: str
    seed: int
    model: WorldModel
    report: LossReport
    raw: Union[tuple[StateEncoder, ActionEncoder], HrrEncoders, MlpModel]

    @property
    def label(self) -> str:
        return f"{self.kind}_seed{self.seed}"


def make_split(cfg: ExperimentConfig, seed: int, ratio: Optional[float] = None) -> DatasetSplit:
    ratio = cfg.zero_shot_ratio if ratio is None else ratio
    return zero_shot_split(enumerate_transitions(cfg.grid), ratio, seed=seed)


def train_model(
    kind: str,
    split: DatasetSplit,
    cfg: ExperimentConfig,
    seed: int,
    dim: Optional[int] = None,
    weights: Optional[LossWeights] = None,
) -> TrainedModel:
    n_states = cfg.grid.n_states
    weights = weights or cfg.loss_weights
    if kind == "fhrr":
        result = train(split, cfg.train_config(seed, dim), weights, n_states=n_states)
        return TrainedModel(kind, seed, FhrrWorldModel(result.enc_s, result.enc_a), result.report,
                            (result.enc_s, result.enc_a))
    if kind == "hrr":
        result = train_hrr(split, cfg.train_config(seed, dim), weights, n_states=n_states)
        return TrainedModel(kind, seed, HrrWorldModel(result.encoders), result.report, result.encoders)
    if kind.startswith("mlp-"):
        result = mlp_train(
            split,
            cfg.mlp_config(kind),
            epochs=cfg.epochs,
            lr=cfg.mlp_learning_rate,
            grad_clip=cfg.grad_clip,
            seed=seed,
            batch_size=cfg.batch_size,
            n_states=n_states,
        )
        return TrainedModel(kind, seed, MlpWorldModel(result.model), result.report, result.model)
    raise ValueError(f"Unknown model kind '{kind}'")


def save_model_checkpoint(trained: TrainedModel, directory: Path, metadata: Optional[dict] = None) -> Path:
    meta = {"seed": trained.seed, **(metadata or {})}
    if trained.kind == "fhrr":
        enc_s, enc_a = trained.raw
        return save_checkpoint(Path(directory) / f"{trained.label}.hwm", enc_s, enc_a, {"kind": "fhrr", **meta})
    if trained.kind == "hrr":
        return save_hrr_checkpoint(Path(directory) / f"{trained.label}.hwm", trained.raw, meta)
    return save_mlp_checkpoint(Path(directory) / f"{trained.label}.hwmb", trained.raw, meta)


# ============================================================================
# Run context
# ============================================================================

@dataclass
class RunContext:
    config: ExperimentConfig
    output_dir: Path
    store: MetricsStore = field(default_factory=MetricsStore)
    threads: int = 1
    artifacts: list[Path] = field(default_factory=list)
    _cache: dict[tuple, TrainedModel] = field(default_factory=dict, repr=False)

    def add(self, path: Path) -> Path:
        self.artifacts.append(Path(path))
        return path

    def trained(self, kind: str, seed: int) -> TrainedModel:
        """Model trained on the configured split; reused across subcommands of one run."""
        key = (kind, seed)
        if key not in self._cache:
            started = time.perf_counter()
            model = train_model(kind, make_split(self.config, seed), self.config, seed)
            logger.info(
                f"Model trained - model={kind} seed={seed} params={model.model.parameter_count()} "
                f"final_total={model.report.final().total:.6f} "
                f"duration_ms={int((time.perf_counter() - started) * 1000)}"
            )
            self.add(model.report.write_csv(self.output_dir / "losses" / f"{model.label}.csv"))
            self.checkpoint(model)
            self._cache[key] = model
        return self._cache[key]

    def checkpoint(self, trained: TrainedModel, subdir: Optional[str] = None, metadata: Optional[dict] = None) -> Path:
        """Save under checkpoints/, or checkpoints/<subdir>/ for models retrained by a sweep."""
        directory = self.output_dir / "checkpoints"
        if subdir:
            directory = directory / subdir
        return self.add(save_model_checkpoint(trained, directory, metadata))


# ============================================================================
# Table-1 style evaluation
# ============================================================================

def evaluate_one_step(ctx: RunContext, trained: TrainedModel) -> dict[str, float]:
    split = make_split(ctx.config, trained.seed)
    metrics = eval_one_step(trained.model, split.all_transitions).to_dict("one_step_")
    metrics.update(eval_one_step(trained.model, split.train).to_dict("train_"))
    if split.holdout:
        metrics.update(eval_one_step(trained.model, split.holdout).to_dict("zero_shot_"))
    metrics["parameters"] = float(trained.model.parameter_count())
    return metrics


def diagnostics(ctx: RunContext, trained: TrainedModel) -> dict[str, float]:
    out = {"composition_accuracy": composition_accuracy(trained.model, ctx.config.grid)}
    if trained.kind == "fhrr":
        enc_s, enc_a = trained.raw
        out["equivariance"] = equivariance_score(enc_s, enc_a, enumerate_transitions(ctx.config.grid))
        for pair, score in homomorphism_score(enc_a).items():
            out[f"homomorphism_{pair}"] = score
    return out


def rollout_rows(kind: str, seed: int, metrics: dict[str, float], horizons) -> list[list]:
    rows = []
    for horizon in horizons:
        rows.append([kind, seed, horizon, False, metrics[f"rollout_{horizon}"]])
        rows.append([kind, seed, horizon, True, metrics[f"rollout_{horizon}_clean"]])
    return rows


# ============================================================================
# Subcommands
# ============================================================================

def run_train(ctx: RunContext) -> None:
    cfg = ctx.config
    for kind in cfg.models:
        for seed in cfg.seeds:
            trained = ctx.trained(kind, seed)
            ctx.store.record("train", kind, seed, trained.report.final().to_dict())


def run_eval(ctx: RunContext) -> None:
    cfg = ctx.config
    for kind in cfg.models:
        for seed in cfg.seeds:
            trained = ctx.trained(kind, seed)
            ctx.store.record("eval", kind, seed, evaluate_one_step(ctx, trained))
            ctx.store.record("diagnostics", kind, seed, diagnostics(ctx, trained))


def run_rollout(ctx: RunContext) -> None:
    cfg = ctx.config
    rows = []
    for kind in cfg.models:
        for seed in cfg.seeds:
            trained = ctx.trained(kind, seed)
            trial_rows: list[list] = []
            metrics = eval_rollouts(
                trained.model, cfg.grid, cfg.rollout_horizons, cfg.cleanup_period,
                cfg.trials, seed=seed, threads=ctx.threads,
                sink=lambda h, period, results: trial_rows.extend(rollout_trial_rows(h, period, results)),
            )
            ctx.store.record("rollout", kind, seed, metrics)
            rows.extend(rollout_rows(kind, seed, metrics, cfg.rollout_horizons))
            ctx.add(write_csv(
                ctx.output_dir / "rollout_trials" / f"{trained.label}.csv",
                CSV_HEADERS["rollout_trials"],
                trial_rows,
            ))
    ctx.add(write_figure_csv(ctx.output_dir, "rollouts", rows))


def sweep_zero_shot(ctx: RunContext) -> list[list]:
    """Retrain per (kind, ratio, seed); horizon-limited rollout accuracy with and without cleanup."""
    cfg = ctx.config
    rows = []
    for kind in cfg.models:
        for ratio in cfg.zero_shot_ratios:
            for seed in cfg.seeds:
                trained = train_model(kind, make_split(cfg, seed, ratio), cfg, seed)
                ctx.checkpoint(trained, f"zero_shot/ratio_{ratio:g}", {"zero_shot_ratio": float(ratio)})
                metrics = eval_rollouts(
                    trained.model, cfg.grid, [cfg.sweep_horizon], cfg.cleanup_period,
                    cfg.trials, seed=seed, threads=ctx.threads,
                )
                plain = metrics[f"rollout_{cfg.sweep_horizon}"]
                clean = metrics[f"rollout_{cfg.sweep_horizon}_clean"]
                ctx.store.record("sweep-zeroshot", kind, seed, {
                    f"ratio_{ratio:g}": plain,
                    f"ratio_{ratio:g}_clean": clean,
                })
                rows.append([kind, float(ratio), seed, plain, clean])
                logger.info(f"Sweep point - model={kind} ratio={ratio:g} seed={seed} accuracy={plain:.1f}")
    ctx.add(write_figure_csv(ctx.output_dir, "zero_shot_sweep", rows))
    return rows


def sweep_robustness(ctx: RunContext) -> list[list]:
    """One-step accuracy on every transition with Gaussian noise on the predicted latent."""
    cfg = ctx.config
    rows = []
    for kind in cfg.models:
        for seed in cfg.seeds:
            trained = ctx.trained(kind, seed)
            transitions = enumerate_transitions(cfg.grid)
            metrics = {}
            for sigma in cfg.noise_sigmas:
                acc = eval_one_step(trained.model, transitions, sigma=sigma, seed=seed).accuracy
                metrics[f"sigma_{sigma:g}"] = acc
                rows.append([kind, float(sigma), seed, acc])
            ctx.store.record("sweep-noise", kind, seed, metrics)
    ctx.add(write_figure_csv(ctx.output_dir, "robustness", rows))
    return rows


def sweep_ablation(ctx: RunContext) -> list[list]:
    """Noise robustness across FHRR dimension, FHRR orthogonality weight and MLP size."""
    cfg = ctx.config
    settings: list[tuple[str, str, Callable[[DatasetSplit, int], TrainedModel]]] = []
    for dim in cfg.ablation_dims:
        settings.append(("dim", str(dim), lambda split, seed, d=dim: train_model("fhrr", split, cfg, seed, dim=d)))
    for w in cfg.ablation_ortho_weights:
        weights = LossWeights(w_bind=cfg.w_bind, w_inv=cfg.w_inv, w_ortho=w)
        settings.append(("ortho", f"{w:g}", lambda split, seed, lw=weights: train_model("fhrr", split, cfg, seed, weights=lw)))
    for kind in ("mlp-s", "mlp-m", "mlp-l"):
        settings.append(("mlp", kind, lambda split, seed, k=kind: train_model(k, split, cfg, seed)))

    transitions = enumerate_transitions(cfg.grid)
    rows = []
    for family, setting, fit in settings:
        for seed in cfg.seeds:
            trained = fit(make_split(cfg, seed), seed)
            ctx.checkpoint(trained, f"ablation/{family}_{setting}", {"ablation": f"{family}={setting}"})
            metrics = {}
            for sigma in cfg.noise_sigmas:
                acc = eval_one_step(trained.model, transitions, sigma=sigma, seed=seed).accuracy
                metrics[f"sigma_{sigma:g}"] = acc
                rows.append([family, setting, float(sigma), seed, acc])
            ctx.store.record("sweep-ablation", f"{family}={setting}", seed, metrics)
    ctx.add(write_figure_csv(ctx.output_dir, "ablation", rows))
    return rows


def default_kernel_states(g: GridSpec) -> list[int]:
    """The central 2x2 block (or the single centre cell on small grids)."""
    rows = sorted({max(0, g.rows // 2 - 1), g.rows // 2})
    cols = sorted({max(0, g.cols // 2 - 1), g.cols // 2})
    return [g.to_index(r, c) for r in rows for c in cols if g.contains(r, c)]


def kernel_profile_report(
    enc_s: StateEncoder,
    g: GridSpec,
    states: list[int],
    k_max: int,
) -> dict[int, list[tuple[int, float, int]]]:
    """Per action: (k, mean similarity over states where s + k*a is on the grid, count)."""
    if not states:
        raise ValueError("Kernel profile needs at least one state")
    report = {}
    for a in Action:
        sums: dict[int, list[float]] = {}
        for s in states:
            for k, sim in similarity_profile(enc_s, s, int(a), -k_max, k_max, g):
                sums.setdefault(k, []).append(sim)
        report[int(a)] = [(k, float(np.mean(v)), len(v)) for k, v in sorted(sums.items())]
    return report


def run_kernel(ctx: RunContext) -> None:
    cfg = ctx.config
    states = cfg.kernel_states or default_kernel_states(cfg.grid)
    rows = []
    for seed in cfg.seeds:
        enc_s, _ = ctx.trained("fhrr", seed).raw
        report = kernel_profile_report(enc_s, cfg.grid, states, cfg.kernel_k_max)
        metrics = {}
        for a, curve in report.items():
            name = Action(a).name.lower()
            for k, sim, n in curve:
                rows.append([seed, name, k, sim, n])
            peak = max(curve, key=lambda point: point[1])[0]
            metrics[f"{name}_peak_k"] = float(peak)
        ctx.store.record("kernel", "fhrr", seed, metrics)
    ctx.add(write_figure_csv(ctx.output_dir, "kernel_profile", rows))


# ============================================================================
# Embedding export
# ============================================================================

def embedding_matrix(trained: TrainedModel) -> tuple[str, np.ndarray]:
    """(column prefix, n_states x width) for the model's state embeddings."""
    if trained.kind == "fhrr":
        return "theta_", trained.raw[0].theta.T
    if trained.kind == "hrr":
        return "x_", trained.raw.state_table.T
    return "e_", trained.raw.state_table


def export_embeddings(trained: TrainedModel, g: GridSpec, path: Path) -> Path:
    """One row per state: state, row, col, then the raw embedding values."""
    prefix, matrix = embedding_matrix(trained)
    header = ["state", "row", "col"] + [f"{prefix}{j}" for j in range(matrix.shape[1])]
    rows = []
    for s in range(matrix.shape[0]):
        r, c = g.to_coords(s)
        rows.append([s, r, c] + [float(x) for x in matrix[s]])
    return write_csv(path, header, rows)


def load_embeddings_csv(path: Path) -> tuple[list[int], np.ndarray, str]:
    """Inverse of export_embeddings: (states, matrix, column prefix)."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:3] != ["state", "row", "col"] or len(header) < 4:
            raise ValueError(f"Not an embeddings export: {path}")
        prefix = header[3].rstrip("0123456789")
        states, values = [], []
        for row in reader:
            states.append(int(row[0]))
            values.append([float(x) for x in row[3:]])
    return states, np.array(values, dtype=np.float64), prefix


def run_export(ctx: RunContext) -> None:
    cfg = ctx.config
    for kind in cfg.models:
        for seed in cfg.seeds:
            trained = ctx.trained(kind, seed)
            ctx.add(export_embeddings(trained, cfg.grid, ctx.output_dir / "embeddings" / f"{trained.label}.csv"))


# ============================================================================
# Inference timing
# ============================================================================

def _median_ms(fn: Callable[[], Any], repetitions: int) -> float:
    for _ in range(BENCH_WARMUP):
        fn()
    samples = np.empty(repetitions)
    for i in range(repetitions):
        started = time.perf_counter()
        fn()
        samples[i] = time.perf_counter() - started
    return float(np.median(samples) * 1000.0)


def benchmark_inference(models: dict[str, WorldModel], repetitions: int = 200, seed: int = 0) -> list[list]:
    """Median wall-clock per single-transition prediction, without and with cleanup."""
    if repetitions < 1:
        raise ValueError(f"Repetitions must be >= 1, got {repetitions}")
    rows = []
    for name, model in models.items():
        rng = np.random.default_rng(seed)
        z = model.embed([int(rng.integers(model.n_states))])
        action = np.array([int(rng.integers(len(Action)))])

        def predict():
            return model.transition(z, action)

        def predict_and_clean():
            return model.decode(model.transition(z, action))

        rows.append([name, model.parameter_count(), _median_ms(predict, repetitions),
                     _median_ms(predict_and_clean, repetitions)])
    return rows


def run_bench(ctx: RunContext) -> None:
    cfg = ctx.config
    seed = cfg.seeds[0]
    models = {kind: ctx.trained(kind, seed).model for kind in cfg.models}
    rows = benchmark_inference(models, cfg.bench_repetitions, seed=seed)
    for name, params, ms, ms_clean in rows:
        ctx.store.record("bench", name, seed, {"parameters": float(params), "ms_step": ms, "ms_step_clean": ms_clean})
    ctx.add(write_figure_csv(ctx.output_dir, "benchmark", rows))


def run_repro_table1(ctx: RunContext) -> None:
    """Training, one-step, zero-shot, rollout and diagnostics for every model and seed."""
    run_train(ctx)
    run_eval(ctx)
    run_rollout(ctx)


COMMANDS: dict[str, Callable[[RunContext], Any]] = {
    "train": run_train,
    "eval": run_eval,
    "rollout": run_rollout,
    "sweep-zeroshot": sweep_zero_shot,
    "sweep-noise": sweep_robustness,
    "sweep-ablation": sweep_ablation,
    "kernel": run_kernel,
    "export": run_export,
    "bench": run_bench,
    "repro-table1": run_repro_table1,
}
