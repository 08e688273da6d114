# modules/hrr_model.py
"""
HRR World Model - Real-valued state/action tables with circular-convolution transitions.

Tables are sampled N(0, 1) and scaled by 1/sqrt(D) at use, so embeddings have unit
expected norm. Losses mirror the FHRR ones with the unit impulse as the identity.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import _first_max
from .encoder import ActionEncoder, StateEncoder, load_checkpoint, save_checkpoint
from .hypervector import hrr_bind, hrr_identity, hrr_unbind
from .gridworld import N_ACTIONS, DatasetSplit, Transition, inverse_pairs
from .training import (
    LossBreakdown,
    LossReport,
    LossWeights,
    TrainConfig,
    TrainingError,
    _batch_indices,
    batch_states,
    check_gradient,
    run_optimizer,
)


logger = logging.getLogger("holoworld.hrr")


@dataclass(eq=False)
class HrrEncoders:
    state_table: np.ndarray   # D x n_s, raw N(0, 1) parameters
    action_table: np.ndarray  # D x n_a

    @property
    def dim(self) -> int:
        return int(self.state_table.shape[0])

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.dim)

    def state_vectors(self, states) -> np.ndarray:
        return (self.state_table[:, np.asarray(states, dtype=np.int64)] * self.scale).T

    def action_vectors(self, actions) -> np.ndarray:
        return (self.action_table[:, np.asarray(actions, dtype=np.int64)] * self.scale).T

    def parameter_count(self) -> int:
        return int(self.state_table.size + self.action_table.size)


def new_hrr_encoders(dim: int, n_states: int, n_actions: int = N_ACTIONS, seed: int = 0) -> HrrEncoders:
    rng = np.random.default_rng(seed)
    return HrrEncoders(
        rng.normal(0.0, 1.0, size=(dim, n_states)),
        rng.normal(0.0, 1.0, size=(dim, n_actions)),
    )


# ============================================================================
# Losses
# ============================================================================

def hrr_losses(
    state_table: np.ndarray,
    action_table: np.ndarray,
    batch: Sequence[Transition],
    weights: LossWeights,
    pairs: Optional[Sequence[tuple[int, int]]] = None,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Weighted bind/inv/ortho losses and gradients w.r.t. the raw tables."""
    if len(batch) == 0:
        raise TrainingError("Binding loss needs a non-empty batch")
    pairs = inverse_pairs() if pairs is None else pairs
    dim = state_table.shape[0]
    scale = 1.0 / np.sqrt(dim)
    losses = LossBreakdown()
    grad_s = np.zeros_like(state_table)
    grad_a = np.zeros_like(action_table)

    # bind: mean_b ||w - u * v||^2
    s, a, sn = _batch_indices(batch)
    n = len(batch)
    u = state_table[:, s].T * scale
    v = action_table[:, a].T * scale
    w = state_table[:, sn].T * scale
    r = w - hrr_bind(u, v)
    losses.bind = float(np.sum(r * r) / n)
    coef = weights.w_bind * scale / n
    np.add.at(grad_s.T, sn, coef * 2.0 * r)
    np.add.at(grad_s.T, s, -coef * 2.0 * hrr_unbind(r, v))
    np.add.at(grad_a.T, a, -coef * 2.0 * hrr_unbind(r, u))

    # inv: sum ||a (*) a^-1 - e0||^2
    identity = hrr_identity(dim)
    for p, q in pairs:
        x = action_table[:, int(p)] * scale
        y = action_table[:, int(q)] * scale
        r = hrr_bind(x, y) - identity
        losses.inv += float(np.sum(r * r))
        grad_a[:, int(p)] += weights.w_inv * scale * 2.0 * hrr_unbind(r, y)
        grad_a[:, int(q)] += weights.w_inv * scale * 2.0 * hrr_unbind(r, x)

    # ortho: sum_{i<j} <phi_i, phi_j>^2
    states = np.array(batch_states(batch), dtype=np.int64)
    if states.size >= 2:
        phi = state_table[:, states] * scale
        gram = phi.T @ phi
        np.fill_diagonal(gram, 0.0)
        losses.ortho = float(np.sum(gram ** 2) / 2.0)
        grad_s[:, states] += weights.w_ortho * scale * 2.0 * (phi @ gram)

    losses.total = weights.w_bind * losses.bind + weights.w_inv * losses.inv + weights.w_ortho * losses.ortho
    return losses, grad_s, grad_a


@dataclass
class HrrTrainResult:
    encoders: HrrEncoders
    report: LossReport


def train_hrr(
    data: DatasetSplit,
    config: TrainConfig = TrainConfig(),
    weights: LossWeights = LossWeights(),
    n_states: Optional[int] = None,
) -> HrrTrainResult:
    if not data.train:
        raise TrainingError("Training set is empty")
    enc = new_hrr_encoders(config.dim, n_states or data.n_states, N_ACTIONS, seed=config.seed)
    pairs = inverse_pairs()

    def objective(batch):
        losses, g_s, g_a = hrr_losses(enc.state_table, enc.action_table, batch, weights, pairs)
        return losses, [g_s, g_a]

    def apply(params):
        enc.state_table, enc.action_table = params[0], params[1]

    report = run_optimizer([enc.state_table, enc.action_table], objective, apply, data.train, config, name="hrr")
    return HrrTrainResult(enc, report)


def hrr_gradient_check(
    enc: HrrEncoders,
    batch: Sequence[Transition],
    n_samples: int = 50,
    h: float = 1e-5,
    weights: LossWeights = LossWeights(),
    seed: int = 0,
) -> float:
    _, g_s, g_a = hrr_losses(enc.state_table, enc.action_table, batch, weights)

    def loss_fn(params):
        return hrr_losses(params[0], params[1], batch, weights)[0].total

    return check_gradient(loss_fn, [enc.state_table, enc.action_table], [g_s, g_a], n_samples, h, seed)


# ============================================================================
# World-model adapter
# ============================================================================

class HrrWorldModel:
    kind = "hrr"

    def __init__(self, enc: HrrEncoders):
        self.enc = enc
        self._codebook = enc.state_vectors(np.arange(enc.state_table.shape[1]))
        norms = np.linalg.norm(self._codebook, axis=1, keepdims=True)
        self._unit_codebook = self._codebook / np.maximum(norms, 1e-12)

    @property
    def n_states(self) -> int:
        return int(self._codebook.shape[0])

    def embed(self, states):
        return self._codebook[np.asarray(states, dtype=np.int64)]

    def transition(self, z, actions):
        return hrr_bind(z, self.enc.action_vectors(actions))

    def _cosines(self, z):
        norms = np.maximum(np.linalg.norm(z, axis=1, keepdims=True), 1e-12)
        return (z / norms) @ self._unit_codebook.T

    def decode(self, z):
        idx = _first_max(self._cosines(z))
        return idx, self._codebook[idx]

    def score(self, z, states):
        targets = self._unit_codebook[np.asarray(states, dtype=np.int64)]
        norms = np.maximum(np.linalg.norm(z, axis=1), 1e-12)
        return np.sum(z * targets, axis=1) / norms

    def perturb(self, z, sigma, rng):
        if sigma == 0:
            return z
        return z + rng.normal(0.0, sigma, size=z.shape)

    def parameter_count(self) -> int:
        return self.enc.parameter_count()


def save_hrr_checkpoint(path, enc: HrrEncoders, metadata: Optional[dict] = None):
    """Same HWM1 envelope as FHRR; the sidecar records kind=hrr."""
    meta = dict(metadata or {})
    meta["kind"] = "hrr"
    return save_checkpoint(path, StateEncoder(enc.state_table), ActionEncoder(enc.action_table), meta)


def load_hrr_checkpoint(path) -> tuple[HrrEncoders, dict]:
    enc_s, enc_a, meta = load_checkpoint(path)
    return HrrEncoders(enc_s.theta, enc_a.theta), meta
