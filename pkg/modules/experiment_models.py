# modules/experiment_models.py
"""
Experiment Models - Pydantic schema for experiment config files.

Every key defaults to the published setting, so an empty file runs the full comparison.
"""
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .baseline_mlp import MlpConfig
from .gridworld import GridSpec
from .training import LossWeights, TrainConfig


MODEL_KINDS = ("fhrr", "hrr", "mlp-s", "mlp-m", "mlp-l")
EXPERIMENTS = (
    "train",
    "eval",
    "rollout",
    "sweep-zeroshot",
    "sweep-noise",
    "sweep-ablation",
    "kernel",
    "export",
    "bench",
    "repro-table1",
)

ModelKind = Literal["fhrr", "hrr", "mlp-s", "mlp-m", "mlp-l"]
ExperimentName = Literal[
    "train", "eval", "rollout", "sweep-zeroshot", "sweep-noise",
    "sweep-ablation", "kernel", "export", "bench", "repro-table1",
]


def _tenths(count: int) -> list[float]:
    return [round(0.1 * i, 1) for i in range(count)]


class ExperimentConfig(BaseModel):
    model_config = {"extra": "forbid", "frozen": True}

    experiment: ExperimentName = "repro-table1"
    models: list[ModelKind] = Field(default_factory=lambda: ["fhrr", "mlp-s", "mlp-m", "mlp-l"])

    # Environment and data
    dim: int = Field(512, ge=1)
    grid_rows: int = Field(10, ge=1)
    grid_cols: int = Field(10, ge=1)
    zero_shot_ratio: float = Field(0.2, ge=0, lt=1)

    # Optimization
    epochs: int = Field(500, ge=1)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    learning_rate: float = Field(0.007, gt=0)
    mlp_learning_rate: float = Field(0.0005, gt=0)
    grad_clip: float = Field(1.0, gt=0)
    batch_size: Optional[int] = Field(None, ge=1)
    optimizer: Literal["adam", "sgd"] = "adam"
    w_bind: float = Field(2.0, ge=0)
    w_inv: float = Field(0.5, ge=0)
    w_ortho: float = Field(0.05, ge=0)

    # Evaluation
    rollout_horizons: list[int] = Field(default_factory=lambda: [5, 20, 100])
    cleanup_period: int = Field(2, ge=1)
    noise_sigmas: list[float] = Field(default_factory=lambda: [0.5 * i for i in range(11)])
    zero_shot_ratios: list[float] = Field(default_factory=lambda: _tenths(10))
    sweep_horizon: int = Field(20, ge=1)
    kernel_k_max: int = Field(10, ge=1)
    kernel_states: Optional[list[int]] = None
    trials: int = Field(500, ge=1)
    bench_repetitions: int = Field(200, ge=1)
    ablation_dims: list[int] = Field(default_factory=lambda: [128, 256, 512, 1024])
    ablation_ortho_weights: list[float] = Field(default_factory=lambda: [0.0, 0.05, 0.5])

    output_dir: str = "results"

    @field_validator("seeds", "models")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("must not be empty")
        return v

    @field_validator("rollout_horizons", "ablation_dims")
    @classmethod
    def _positive_ints(cls, v):
        if any(x < 1 for x in v):
            raise ValueError(f"all values must be >= 1, got {v}")
        return v

    @field_validator("noise_sigmas", "ablation_ortho_weights")
    @classmethod
    def _non_negative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError(f"all values must be >= 0, got {v}")
        return v

    @field_validator("zero_shot_ratios")
    @classmethod
    def _ratios_in_range(cls, v):
        if any(not 0 <= x < 1 for x in v):
            raise ValueError(f"ratios must lie in [0, 1), got {v}")
        return v

    @model_validator(mode="after")
    def _kernel_states_on_grid(self):
        if self.kernel_states is not None:
            n = self.grid_rows * self.grid_cols
            bad = [s for s in self.kernel_states if not 0 <= s < n]
            if bad:
                raise ValueError(f"kernel_states outside the {self.grid_rows}x{self.grid_cols} grid: {bad}")
        return self

    # ------------------------------------------------------------------------
    # Derived settings
    # ------------------------------------------------------------------------

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.grid_rows, self.grid_cols)

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(w_bind=self.w_bind, w_inv=self.w_inv, w_ortho=self.w_ortho)

    def train_config(self, seed: int, dim: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            dim=dim or self.dim,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            grad_clip=self.grad_clip,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            seed=seed,
        )

    @staticmethod
    def mlp_config(kind: str) -> MlpConfig:
        return MlpConfig.for_variant(kind.split("-", 1)[1])
