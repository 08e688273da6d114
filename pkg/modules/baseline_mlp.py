# modules/baseline_mlp.py
"""
MLP Baselines - Learned state/action embedding tables feeding a ReLU network that
predicts the next state embedding.

Variants:
  - S: 2 hidden layers of width 128
  - M: 4 hidden layers of width 256
  - L: 6 hidden layers of width 512

The MSE target is the current state-table row of s_next, so the tables train jointly
with the network. Decoding is nearest neighbour by cosine against the state table.
"""
import json
import logging
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .dynamics import CleanupPolicy, RolloutResult, _first_max, rollout_core
from .encoder import CheckpointError, sidecar_path
from .gridworld import N_ACTIONS, DatasetSplit, Transition
from .training import (
    LossBreakdown,
    LossReport,
    TrainConfig,
    TrainingError,
    _batch_indices,
    check_gradient,
    run_optimizer,
)


logger = logging.getLogger("holoworld.mlp")

MLP_CHECKPOINT_MAGIC = b"HWMB"
_MLP_HEADER = struct.Struct("<4sIIIIII")
_LAYER_SHAPE = struct.Struct("<II")
_CUSTOM_VARIANT_CODE = 255


class MlpVariant(str, Enum):
    S = "S"
    M = "M"
    L = "L"

    @property
    def code(self) -> int:
        return list(MlpVariant).index(self)


VARIANT_SHAPES: dict[MlpVariant, tuple[int, int]] = {
    MlpVariant.S: (2, 128),
    MlpVariant.M: (4, 256),
    MlpVariant.L: (6, 512),
}


class MlpConfig(BaseModel):
    """Network shape. A named variant pins hidden_layers/hidden_width."""
    model_config = {"extra": "forbid", "frozen": True}

    state_dim: int = Field(64, ge=1)
    action_dim: int = Field(16, ge=1)
    hidden_layers: int = Field(2, ge=0)
    hidden_width: int = Field(128, ge=1)
    variant: Optional[MlpVariant] = MlpVariant.S

    @model_validator(mode="after")
    def _variant_matches_shape(self):
        if self.variant is not None:
            expected = VARIANT_SHAPES[self.variant]
            if (self.hidden_layers, self.hidden_width) != expected:
                raise ValueError(
                    f"MLP-{self.variant.value} requires (hidden_layers, hidden_width)={expected}, "
                    f"got ({self.hidden_layers}, {self.hidden_width})"
                )
        return self

    @classmethod
    def for_variant(cls, variant, **overrides) -> "MlpConfig":
        if not isinstance(variant, MlpVariant):
            variant = MlpVariant(str(variant).upper())
        layers, width = VARIANT_SHAPES[variant]
        return cls(hidden_layers=layers, hidden_width=width, variant=variant, **overrides)

    @property
    def layer_dims(self) -> list[int]:
        return [self.state_dim + self.action_dim] + [self.hidden_width] * self.hidden_layers + [self.state_dim]

    @property
    def name(self) -> str:
        return f"mlp-{self.variant.value.lower()}" if self.variant else "mlp-custom"


def mlp_parameter_count(cfg: MlpConfig, n_states: int = 100, n_actions: int = N_ACTIONS) -> int:
    dims = cfg.layer_dims
    dense = sum(i * o + o for i, o in zip(dims[:-1], dims[1:]))
    return n_states * cfg.state_dim + n_actions * cfg.action_dim + dense


# ============================================================================
# Model
# ============================================================================

@dataclass(eq=False)
class MlpModel:
    config: MlpConfig
    state_table: np.ndarray   # n_s x state_dim
    action_table: np.ndarray  # n_a x action_dim
    weights: list[np.ndarray] = field(default_factory=list)  # in x out
    biases: list[np.ndarray] = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return int(self.state_table.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.action_table.shape[0])

    def params(self) -> list[np.ndarray]:
        out = [self.state_table, self.action_table]
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        self.state_table, self.action_table = params[0], params[1]
        self.weights = list(params[2::2])
        self.biases = list(params[3::2])

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params()))


def init_mlp(cfg: MlpConfig, n_states: int, n_actions: int = N_ACTIONS, seed: int = 0) -> MlpModel:
    """Tables ~ N(0, 1); dense weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    rng = np.random.default_rng(seed)
    state_table = rng.normal(0.0, 1.0, size=(n_states, cfg.state_dim))
    action_table = rng.normal(0.0, 1.0, size=(n_actions, cfg.action_dim))
    weights, biases = [], []
    dims = cfg.layer_dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(cfg, state_table, action_table, weights, biases)


def _check_indices(values, size: int, kind: str) -> np.ndarray:
    idx = np.atleast_1d(np.asarray(values))
    if idx.dtype.kind not in "iu" or np.any(idx < 0) or np.any(idx >= size):
        raise IndexError(f"{kind} index out of range [0, {size}): {values!r}")
    return idx.astype(np.int64)


def forward_embedding(m: MlpModel, z: np.ndarray, actions) -> tuple[np.ndarray, list[np.ndarray]]:
    """
    Batched forward pass from state embeddings z (n x state_dim).

    Returns the output and the layer inputs, which backprop needs.
    """
    actions = _check_indices(actions, m.n_actions, "Action")
    h = np.concatenate([np.atleast_2d(z), m.action_table[actions]], axis=1)
    inputs = []
    last = len(m.weights) - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        inputs.append(h)
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h, inputs


def mlp_forward(m: MlpModel, s: int, a: int) -> np.ndarray:
    s_idx = _check_indices(s, m.n_states, "State")
    out, _ = forward_embedding(m, m.state_table[s_idx], a)
    return out[0]


def mlp_loss_and_grads(m: MlpModel, batch: Sequence[Transition]) -> tuple[float, list[np.ndarray]]:
    """MSE between predictions and the state-table rows of s_next, with gradients for params()."""
    if len(batch) == 0:
        raise TrainingError("MLP loss needs a non-empty batch")
    s, a, sn = _batch_indices(batch)
    out, inputs = forward_embedding(m, m.state_table[s], a)
    residual = out - m.state_table[sn]
    loss = float(np.mean(residual ** 2))

    grad_state = np.zeros_like(m.state_table)
    grad_action = np.zeros_like(m.action_table)
    delta = 2.0 * residual / residual.size
    np.add.at(grad_state, sn, -delta)

    grad_w: list[np.ndarray] = [None] * len(m.weights)
    grad_b: list[np.ndarray] = [None] * len(m.weights)
    for i in range(len(m.weights) - 1, -1, -1):
        grad_w[i] = inputs[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        delta = delta @ m.weights[i].T
        if i > 0:
            # inputs[i] is the ReLU output of layer i-1
            delta = delta * (inputs[i] > 0.0)

    state_dim = m.config.state_dim
    np.add.at(grad_state, s, delta[:, :state_dim])
    np.add.at(grad_action, a, delta[:, state_dim:])

    grads = [grad_state, grad_action]
    for gw, gb in zip(grad_w, grad_b):
        grads.extend([gw, gb])
    return loss, grads


@dataclass
class MlpTrainResult:
    model: MlpModel
    report: LossReport


def mlp_train(
    data: DatasetSplit,
    cfg: MlpConfig,
    epochs: int = 500,
    lr: float = 0.0005,
    grad_clip: float = 1.0,
    seed: int = 0,
    batch_size: Optional[int] = None,
    n_states: Optional[int] = None,
) -> MlpTrainResult:
    """Adam on the joint tables and network; deterministic per seed."""
    if not data.train:
        raise TrainingError("Training set is empty")
    model = init_mlp(cfg, n_states or data.n_states, N_ACTIONS, seed=seed)
    config = TrainConfig(
        dim=cfg.state_dim, epochs=epochs, learning_rate=lr,
        grad_clip=grad_clip, batch_size=batch_size, seed=seed,
    )

    def objective(batch):
        loss, grads = mlp_loss_and_grads(model, batch)
        return LossBreakdown(bind=loss, total=loss), grads

    report = run_optimizer(model.params(), objective, model.set_params, data.train, config, name=cfg.name)
    return MlpTrainResult(model, report)


def mlp_gradient_check(
    m: MlpModel,
    batch: Sequence[Transition],
    n_samples: int = 50,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    _, grads = mlp_loss_and_grads(m, batch)

    def loss_fn(params):
        perturbed = MlpModel(m.config, m.state_table, m.action_table)
        perturbed.set_params(params)
        return mlp_loss_and_grads(perturbed, batch)[0]

    return check_gradient(loss_fn, m.params(), grads, n_samples, h, seed)


# ============================================================================
# Decoding and rollout
# ============================================================================

def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.maximum(norms, 1e-12)


def mlp_decode_batch(m: MlpModel, predicted: np.ndarray) -> np.ndarray:
    sims = _unit_rows(np.atleast_2d(predicted)) @ _unit_rows(m.state_table).T
    return _first_max(sims)


def mlp_decode(m: MlpModel, predicted: np.ndarray) -> int:
    """Argmax cosine against the state table; a zero vector decodes to state 0."""
    return int(mlp_decode_batch(m, predicted)[0])


class MlpWorldModel:
    """MLP baseline behind the WorldModel interface; latents are raw 64-d embeddings."""

    def __init__(self, model: MlpModel):
        self.model = model
        self.kind = model.config.name
        self._unit_table = _unit_rows(model.state_table)

    @property
    def n_states(self) -> int:
        return self.model.n_states

    def embed(self, states):
        return self.model.state_table[np.asarray(states, dtype=np.int64)]

    def transition(self, z, actions):
        return forward_embedding(self.model, z, actions)[0]

    def decode(self, z):
        idx = _first_max(_unit_rows(z) @ self._unit_table.T)
        return idx, self.model.state_table[idx]

    def score(self, z, states):
        return np.sum(_unit_rows(z) * self._unit_table[np.asarray(states, dtype=np.int64)], axis=1)

    def perturb(self, z, sigma, rng):
        if sigma == 0:
            return z
        return z + rng.normal(0.0, sigma, size=z.shape)

    def parameter_count(self) -> int:
        return self.model.parameter_count()


def mlp_rollout(
    m: MlpModel,
    s0: int,
    actions: Sequence[int],
    cleanup_period: Optional[int],
    true_states: Sequence[int],
) -> RolloutResult:
    """Feed raw predictions forward; snap to the nearest table row every cleanup_period steps."""
    if not actions:
        raise ValueError("Rollout needs at least one action")
    if len(true_states) != len(actions):
        raise ValueError(f"Expected {len(actions)} true states, got {len(true_states)}")
    wm = MlpWorldModel(m)
    acts = _check_indices(list(actions), m.n_actions, "Action")
    truth = np.asarray(true_states, dtype=np.int64)
    return rollout_core(
        wm.embed([s0]),
        len(acts),
        transition=lambda z, t: wm.transition(z, acts[t:t + 1]),
        decode=wm.decode,
        score=lambda z, t: wm.score(z, truth[t:t + 1]),
        true_states=truth[None, :],
        policy=CleanupPolicy(cleanup_period),
    )[0]


# ============================================================================
# Checkpoints
# ============================================================================

def save_mlp_checkpoint(path: Path, m: MlpModel, metadata: Optional[dict[str, Any]] = None) -> Path:
    """HWMB binary: header, per-layer (in, out), then tables and layers as little-endian f8."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cfg = m.config
    code = cfg.variant.code if cfg.variant else _CUSTOM_VARIANT_CODE
    with open(path, "wb") as f:
        f.write(_MLP_HEADER.pack(
            MLP_CHECKPOINT_MAGIC, code, m.n_states, m.n_actions,
            cfg.state_dim, cfg.action_dim, len(m.weights),
        ))
        for w in m.weights:
            f.write(_LAYER_SHAPE.pack(*w.shape))
        for p in m.params():
            f.write(np.ascontiguousarray(p, dtype="<f8").tobytes())

    meta = dict(metadata or {})
    meta["kind"] = cfg.name
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    logger.info(f"Checkpoint saved - path={path.name} model={cfg.name} params={m.parameter_count()}")
    return path


def load_mlp_checkpoint(path: Path) -> tuple[MlpModel, dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    data = path.read_bytes()
    if len(data) < _MLP_HEADER.size:
        raise CheckpointError(f"Checkpoint truncated: {path}")
    magic, code, n_s, n_a, state_dim, action_dim, n_layers = _MLP_HEADER.unpack_from(data, 0)
    if magic != MLP_CHECKPOINT_MAGIC:
        raise CheckpointError(f"Bad magic {magic!r} in {path}, expected {MLP_CHECKPOINT_MAGIC!r}")
    offset = _MLP_HEADER.size
    if len(data) < offset + n_layers * _LAYER_SHAPE.size:
        raise CheckpointError(f"Checkpoint truncated: {path}")
    shapes = []
    for _ in range(n_layers):
        shapes.append(_LAYER_SHAPE.unpack_from(data, offset))
        offset += _LAYER_SHAPE.size

    param_shapes = [(n_s, state_dim), (n_a, action_dim)]
    for fan_in, fan_out in shapes:
        param_shapes.extend([(fan_in, fan_out), (fan_out,)])
    expected = offset + 8 * sum(int(np.prod(s)) for s in param_shapes)
    if len(data) != expected:
        raise CheckpointError(f"Checkpoint size {len(data)} != expected {expected}: {path}")

    params = []
    for shape in param_shapes:
        count = int(np.prod(shape))
        params.append(np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64))
        offset += 8 * count

    hidden_width = shapes[0][1] if n_layers > 1 else 1
    if code == _CUSTOM_VARIANT_CODE:
        cfg = MlpConfig(
            state_dim=state_dim, action_dim=action_dim,
            hidden_layers=n_layers - 1, hidden_width=hidden_width, variant=None,
        )
    else:
        try:
            variant = list(MlpVariant)[code]
        except IndexError:
            raise CheckpointError(f"Unknown MLP variant code {code} in {path}")
        cfg = MlpConfig.for_variant(variant, state_dim=state_dim, action_dim=action_dim)
        if cfg.hidden_layers != n_layers - 1:
            raise CheckpointError(f"Layer count {n_layers} does not match MLP-{variant.value}")

    model = MlpModel(cfg, params[0], params[1])
    model.set_params(params)

    metadata: dict[str, Any] = {}
    sidecar = sidecar_path(path)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as f:
            metadata = json.load(f)
    return model, metadata
