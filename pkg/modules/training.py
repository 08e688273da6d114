# modules/training.py
"""
Training - Binding / invertibility / orthogonality losses with analytic gradients,
Adam with global-norm clipping, and the epoch loop shared by every model kind.

Loss conventions:
  - ||.||^2 of a complex vector is sum_d (Re^2 + Im^2).
  - L_bind is averaged over the batch; L_inv and L_ortho are summed over pairs.
  - L_ortho uses the normalized similarity (1/D) Re<phi_i, phi_j>.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from .encoder import ActionEncoder, StateEncoder, new_encoders
from .gridworld import N_ACTIONS, Action, DatasetSplit, Transition, inverse_pairs


logger = logging.getLogger("holoworld.training")

LOSS_CSV_HEADER = ["epoch", "bind", "inv", "ortho", "total"]


class TrainingError(ValueError):
    """Raised for invalid training inputs (empty batches, shape mismatches)."""


# ============================================================================
# Configuration
# ============================================================================

class LossWeights(BaseModel):
    """Balance between the three objectives."""
    model_config = {"extra": "forbid", "frozen": True}

    w_bind: float = Field(2.0, ge=0)
    w_inv: float = Field(0.5, ge=0)
    w_ortho: float = Field(0.05, ge=0)


class TrainConfig(BaseModel):
    """Optimizer settings. batch_size=None means full batch."""
    model_config = {"extra": "forbid", "frozen": True}

    dim: int = Field(512, ge=1)
    epochs: int = Field(500, ge=1)
    learning_rate: float = Field(0.007, gt=0)
    grad_clip: float = Field(1.0, gt=0)
    batch_size: Optional[int] = Field(None, ge=1)
    optimizer: Literal["adam", "sgd"] = "adam"
    seed: int = 0
    log_every: int = Field(50, ge=1)


# ============================================================================
# Results
# ============================================================================

class PhaseGradients(NamedTuple):
    theta_s: np.ndarray
    theta_a: np.ndarray


@dataclass
class LossBreakdown:
    bind: float = 0.0
    inv: float = 0.0
    ortho: float = 0.0
    total: float = 0.0

    def to_dict(self) -> dict:
        return {"bind": self.bind, "inv": self.inv, "ortho": self.ortho, "total": self.total}


@dataclass
class LossReport:
    """Per-epoch loss components."""
    epochs: list[int] = field(default_factory=list)
    bind: list[float] = field(default_factory=list)
    inv: list[float] = field(default_factory=list)
    ortho: list[float] = field(default_factory=list)
    total: list[float] = field(default_factory=list)

    def append(self, epoch: int, losses: LossBreakdown) -> None:
        self.epochs.append(epoch)
        self.bind.append(losses.bind)
        self.inv.append(losses.inv)
        self.ortho.append(losses.ortho)
        self.total.append(losses.total)

    def rows(self) -> list[list]:
        return [list(r) for r in zip(self.epochs, self.bind, self.inv, self.ortho, self.total)]

    def final(self) -> LossBreakdown:
        if not self.epochs:
            return LossBreakdown()
        return LossBreakdown(self.bind[-1], self.inv[-1], self.ortho[-1], self.total[-1])

    def write_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(LOSS_CSV_HEADER)
            for row in self.rows():
                writer.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        return path


@dataclass
class OptimizerState:
    """Adam moments shaped like the parameter list."""
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "OptimizerState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


@dataclass
class TrainResult:
    enc_s: StateEncoder
    enc_a: ActionEncoder
    report: LossReport


# ============================================================================
# Losses
# ============================================================================

def _batch_indices(batch: Sequence[Transition]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    arr = np.array([(t.s, int(t.a), t.s_next) for t in batch], dtype=np.int64)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def _binding_terms(theta_s: np.ndarray, theta_a: np.ndarray, batch: Sequence[Transition]):
    if len(batch) == 0:
        raise TrainingError("Binding loss needs a non-empty batch")
    s, a, sn = _batch_indices(batch)
    n = len(batch)
    delta = theta_s[:, sn] - theta_s[:, s] - theta_a[:, a]
    # |e^{i x} - e^{i y}|^2 = 2 - 2 cos(x - y)
    loss = float(np.sum(2.0 - 2.0 * np.cos(delta)) / n)
    g = 2.0 * np.sin(delta) / n
    grad_s = np.zeros_like(theta_s)
    grad_a = np.zeros_like(theta_a)
    np.add.at(grad_s.T, sn, g.T)
    np.add.at(grad_s.T, s, -g.T)
    np.add.at(grad_a.T, a, -g.T)
    return loss, grad_s, grad_a


def _invertibility_terms(theta_a: np.ndarray, pairs: Sequence[tuple[int, int]]):
    if len(pairs) == 0:
        raise TrainingError("Invertibility loss needs at least one (a, a^-1) pair")
    loss = 0.0
    grad_a = np.zeros_like(theta_a)
    for a, a_inv in pairs:
        total_phase = theta_a[:, int(a)] + theta_a[:, int(a_inv)]
        loss += float(np.sum(2.0 - 2.0 * np.cos(total_phase)))
        g = 2.0 * np.sin(total_phase)
        grad_a[:, int(a)] += g
        grad_a[:, int(a_inv)] += g
    return loss, grad_a


def _orthogonality_terms(theta_s: np.ndarray, states: Sequence[int]):
    idx = np.array(sorted(set(int(s) for s in states)), dtype=np.int64)
    if idx.size < 2:
        raise TrainingError("Orthogonality loss needs at least 2 distinct states")
    dim = theta_s.shape[0]
    phases = theta_s[:, idx]
    cos_p = np.cos(phases)
    sin_p = np.sin(phases)
    # G_ij = (1/D) sum_d cos(theta_i - theta_j)
    gram = (cos_p.T @ cos_p + sin_p.T @ sin_p) / dim
    np.fill_diagonal(gram, 0.0)
    loss = float(np.sum(gram ** 2) / 2.0)
    # d/dtheta_{d,i} = -(2/D) sum_j G_ij sin(theta_{d,i} - theta_{d,j})
    grad_cols = -(2.0 / dim) * (sin_p * (cos_p @ gram) - cos_p * (sin_p @ gram))
    grad_s = np.zeros_like(theta_s)
    grad_s[:, idx] = grad_cols
    return loss, grad_s


def batch_states(batch: Sequence[Transition]) -> list[int]:
    """Distinct states appearing in the batch (as s or s_next)."""
    return sorted({t.s for t in batch} | {t.s_next for t in batch})


def binding_loss(enc_s: StateEncoder, enc_a: ActionEncoder, batch: Sequence[Transition]) -> tuple[float, PhaseGradients]:
    """mean_b ||phi_S(s') - phi_S(s) (.) phi_A(a)||^2 and its gradient."""
    loss, grad_s, grad_a = _binding_terms(enc_s.theta, enc_a.theta, batch)
    return loss, PhaseGradients(grad_s, grad_a)


def invertibility_loss(enc_a: ActionEncoder, pairs: Sequence[tuple[int, int]]) -> tuple[float, np.ndarray]:
    """sum over (a, a^-1) of ||phi_A(a) (.) phi_A(a^-1) - 1||^2 and its gradient."""
    return _invertibility_terms(enc_a.theta, pairs)


def orthogonality_loss(enc_s: StateEncoder, states: Sequence[int]) -> tuple[float, np.ndarray]:
    """sum over unordered distinct pairs of similarity(phi_S(s_i), phi_S(s_j))^2."""
    return _orthogonality_terms(enc_s.theta, states)


def _total_terms(
    theta_s: np.ndarray,
    theta_a: np.ndarray,
    batch: Sequence[Transition],
    weights: LossWeights,
    pairs: Optional[Sequence[tuple[int, int]]] = None,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    pairs = inverse_pairs() if pairs is None else pairs
    losses = LossBreakdown()
    grad_s = np.zeros_like(theta_s)
    grad_a = np.zeros_like(theta_a)

    bind, g_s, g_a = _binding_terms(theta_s, theta_a, batch)
    losses.bind = bind
    grad_s += weights.w_bind * g_s
    grad_a += weights.w_bind * g_a

    if pairs:
        inv, g_a = _invertibility_terms(theta_a, pairs)
        losses.inv = inv
        grad_a += weights.w_inv * g_a

    states = batch_states(batch)
    if len(states) >= 2:
        ortho, g_s = _orthogonality_terms(theta_s, states)
        losses.ortho = ortho
        grad_s += weights.w_ortho * g_s

    losses.total = weights.w_bind * losses.bind + weights.w_inv * losses.inv + weights.w_ortho * losses.ortho
    return losses, grad_s, grad_a


def total_loss(
    enc_s: StateEncoder,
    enc_a: ActionEncoder,
    batch: Sequence[Transition],
    weights: LossWeights = LossWeights(),
    pairs: Optional[Sequence[tuple[int, int]]] = None,
) -> tuple[LossBreakdown, PhaseGradients]:
    """Weighted sum of the three losses; the orthogonality batch is the batch's distinct states."""
    losses, grad_s, grad_a = _total_terms(enc_s.theta, enc_a.theta, batch, weights, pairs)
    return losses, PhaseGradients(grad_s, grad_a)


# ============================================================================
# Optimizers
# ============================================================================

def global_norm(arrays: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in arrays)))


def clip_by_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        return [g * scale for g in grads], norm
    return [g.copy() for g in grads], norm


def _check_shapes(params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
    if len(params) != len(grads):
        raise TrainingError(f"Got {len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise TrainingError(f"Gradient shape {g.shape} does not match parameter shape {p.shape}")


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    opt: OptimizerState,
    lr: float,
    grad_clip: float,
) -> tuple[list[np.ndarray], OptimizerState]:
    """Global-norm clipping of the concatenated gradient, then one Adam update."""
    _check_shapes(params, grads)
    _check_shapes(params, opt.m)
    grads, _ = clip_by_global_norm(grads, grad_clip)
    t = opt.step + 1
    new_m, new_v, new_params = [], [], []
    for p, g, m, v in zip(params, grads, opt.m, opt.v):
        m = opt.beta1 * m + (1.0 - opt.beta1) * g
        v = opt.beta2 * v + (1.0 - opt.beta2) * g * g
        m_hat = m / (1.0 - opt.beta1 ** t)
        v_hat = v / (1.0 - opt.beta2 ** t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + opt.eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, OptimizerState(new_m, new_v, t, opt.beta1, opt.beta2, opt.eps)


def sgd_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    opt: OptimizerState,
    lr: float,
    grad_clip: float,
) -> tuple[list[np.ndarray], OptimizerState]:
    _check_shapes(params, grads)
    grads, _ = clip_by_global_norm(grads, grad_clip)
    new_params = [p - lr * g for p, g in zip(params, grads)]
    return new_params, OptimizerState(opt.m, opt.v, opt.step + 1, opt.beta1, opt.beta2, opt.eps)


# ============================================================================
# Epoch loop
# ============================================================================

Objective = Callable[[Sequence[Transition]], tuple[LossBreakdown, list[np.ndarray]]]


def iter_batches(
    transitions: Sequence[Transition],
    batch_size: Optional[int],
    rng: np.random.Generator,
) -> list[list[Transition]]:
    transitions = list(transitions)
    if batch_size is None or batch_size >= len(transitions):
        return [transitions]
    order = rng.permutation(len(transitions))
    return [
        [transitions[i] for i in order[start:start + batch_size]]
        for start in range(0, len(transitions), batch_size)
    ]


def run_optimizer(
    params: list[np.ndarray],
    objective: Objective,
    apply: Callable[[list[np.ndarray]], None],
    transitions: Sequence[Transition],
    config: TrainConfig,
    name: str = "model",
) -> LossReport:
    """
    Shared epoch loop.

    `objective` reads the current parameters (through whatever `apply` last wrote) and
    returns losses plus gradients aligned with `params`.
    """
    if len(transitions) == 0:
        raise TrainingError("Training set is empty")
    step_fn = adam_step if config.optimizer == "adam" else sgd_step
    opt = OptimizerState.zeros_like(params)
    rng = np.random.default_rng(config.seed)
    report = LossReport()

    logger.info(
        f"Training started - model={name} transitions={len(transitions)} "
        f"epochs={config.epochs} lr={config.learning_rate} optimizer={config.optimizer}"
    )
    for epoch in range(1, config.epochs + 1):
        epoch_losses = LossBreakdown()
        seen = 0
        for batch in iter_batches(transitions, config.batch_size, rng):
            losses, grads = objective(batch)
            params, opt = step_fn(params, grads, opt, config.learning_rate, config.grad_clip)
            apply(params)
            n = len(batch)
            epoch_losses.bind += losses.bind * n
            epoch_losses.inv += losses.inv * n
            epoch_losses.ortho += losses.ortho * n
            epoch_losses.total += losses.total * n
            seen += n
        epoch_losses = LossBreakdown(
            epoch_losses.bind / seen,
            epoch_losses.inv / seen,
            epoch_losses.ortho / seen,
            epoch_losses.total / seen,
        )
        report.append(epoch, epoch_losses)
        if epoch % config.log_every == 0 or epoch == config.epochs:
            logger.info(f"Epoch complete - model={name} epoch={epoch} total={epoch_losses.total:.6f}")
        else:
            logger.debug(f"Epoch complete - model={name} epoch={epoch} total={epoch_losses.total:.6f}")
    return report


def train(
    data: DatasetSplit,
    config: TrainConfig = TrainConfig(),
    weights: LossWeights = LossWeights(),
    n_states: Optional[int] = None,
) -> TrainResult:
    """Fit FHRR encoders on the split's train transitions."""
    if not data.train:
        raise TrainingError("Training set is empty")
    n_states = n_states or data.n_states
    enc_s, enc_a = new_encoders(config.dim, n_states, N_ACTIONS, seed=config.seed)
    pairs = inverse_pairs()

    def objective(batch):
        losses, grad_s, grad_a = _total_terms(enc_s.theta, enc_a.theta, batch, weights, pairs)
        return losses, [grad_s, grad_a]

    def apply(params):
        enc_s.update(params[0])
        enc_a.update(params[1])

    report = run_optimizer([enc_s.theta, enc_a.theta], objective, apply, data.train, config, name="fhrr")
    return TrainResult(enc_s, enc_a, report)


# ============================================================================
# Gradient verification
# ============================================================================

def relative_error(analytic: float, numeric: float, atol: float = 1e-8) -> float:
    diff = abs(analytic - numeric)
    if diff <= atol:
        return 0.0
    return diff / max(abs(analytic), abs(numeric))


def check_gradient(
    loss_fn: Callable[[list[np.ndarray]], float],
    params: list[np.ndarray],
    grads: list[np.ndarray],
    n_samples: int = 50,
    h: float = 1e-5,
    seed: int = 0,
    atol: float = 1e-8,
) -> float:
    """Central finite differences at randomly chosen coordinates; returns the worst relative error."""
    if h <= 0:
        raise TrainingError(f"Finite-difference step must be positive, got {h}")
    sizes = [p.size for p in params]
    offsets = np.cumsum([0] + sizes)
    rng = np.random.default_rng(seed)
    sampled = rng.choice(offsets[-1], size=min(n_samples, offsets[-1]), replace=False)
    worst = 0.0
    for flat in sampled:
        k = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = int(flat - offsets[k])
        plus = [p.copy() for p in params]
        minus = [p.copy() for p in params]
        plus[k].flat[local] += h
        minus[k].flat[local] -= h
        numeric = (loss_fn(plus) - loss_fn(minus)) / (2.0 * h)
        worst = max(worst, relative_error(float(grads[k].flat[local]), numeric, atol))
    return worst


def gradient_check(
    enc_s: StateEncoder,
    enc_a: ActionEncoder,
    batch: Sequence[Transition],
    n_samples: int = 50,
    h: float = 1e-5,
    weights: LossWeights = LossWeights(),
    seed: int = 0,
) -> float:
    """Worst relative error between analytic and finite-difference gradients of total_loss."""
    pairs = inverse_pairs()
    _, grad_s, grad_a = _total_terms(enc_s.theta, enc_a.theta, batch, weights, pairs)

    def loss_fn(params):
        return _total_terms(params[0], params[1], batch, weights, pairs)[0].total

    return check_gradient(loss_fn, [enc_s.theta, enc_a.theta], [grad_s, grad_a], n_samples, h, seed)


# ============================================================================
# Diagnostics
# ============================================================================

def equivariance_score(enc_s: StateEncoder, enc_a: ActionEncoder, transitions: Sequence[Transition]) -> float:
    """Mean similarity(phi_S(s'), phi_S(s) (.) phi_A(a)) over the transitions."""
    s, a, sn = _batch_indices(transitions)
    delta = enc_s.theta[:, sn] - enc_s.theta[:, s] - enc_a.theta[:, a]
    return float(np.mean(np.cos(delta)))


def homomorphism_score(
    enc_a: ActionEncoder,
    pairs: Optional[Sequence[tuple[int, int]]] = None,
) -> dict[str, float]:
    """similarity(phi_A(a) (.) phi_A(a^-1), identity) per inverse pair."""
    pairs = inverse_pairs() if pairs is None else pairs
    scores = {}
    for a, a_inv in pairs:
        total_phase = enc_a.theta[:, int(a)] + enc_a.theta[:, int(a_inv)]
        scores[f"{Action(int(a)).name.lower()}-{Action(int(a_inv)).name.lower()}"] = float(np.mean(np.cos(total_phase)))
    return scores
