# modules/dynamics.py
"""
Dynamics - Latent transitions, multi-step rollouts, codebook cleanup and noise injection.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from .encoder import Codebook, StateEncoder
from .gridworld import ACTION_DELTAS, GridSpec, check_action
from .hypervector import (
    ComplexHV,
    HypervectorError,
    PhaseVector,
    bind_complex,
    similarity,
)


TIE_TOLERANCE = 1e-12


class Provenance(str, Enum):
    CLEAN = "clean"
    NOISY = "noisy"
    CLEANED = "cleaned"


@dataclass(frozen=True, eq=False)
class LatentState:
    hv: ComplexHV
    provenance: Provenance = Provenance.CLEAN

    @property
    def dim(self) -> int:
        return self.hv.dim


@dataclass(frozen=True)
class CleanupPolicy:
    """Snap to the codebook every `period` steps; period=None disables cleanup."""
    period: Optional[int] = 2

    def __post_init__(self):
        if self.period is not None and self.period < 1:
            raise ValueError(f"Cleanup period must be >= 1 when enabled, got {self.period}")

    @property
    def enabled(self) -> bool:
        return self.period is not None

    @classmethod
    def disabled(cls) -> "CleanupPolicy":
        return cls(period=None)

    def due(self, step_number: int) -> bool:
        return self.enabled and step_number % self.period == 0


@dataclass
class RolloutResult:
    """One trial: decoded state and similarity to the true embedding at every step."""
    decoded_states: list[int]
    similarities: list[float]
    true_states: list[int] = field(default_factory=list)
    final_correct: bool = False

    @property
    def horizon(self) -> int:
        return len(self.decoded_states)

    @property
    def steps_correct(self) -> int:
        return int(sum(d == t for d, t in zip(self.decoded_states, self.true_states)))


@dataclass
class OpCounter:
    """Instrumentation for counting canonicalization passes."""
    canonicalize: int = 0


# ============================================================================
# Single-latent operations
# ============================================================================

def predict_next(z: LatentState, a_hv: ComplexHV) -> LatentState:
    """tau(z, a) = z (.) a. Binding never changes provenance."""
    return LatentState(bind_complex(z.hv, a_hv), z.provenance)


def rollout_embedding(z0: LatentState, actions: Sequence[ComplexHV]) -> list[LatentState]:
    """Iterated binding; the k-th output is z0 bound with the first k actions."""
    if not actions:
        raise ValueError("Rollout needs at least one action")
    out = []
    z = z0
    for a_hv in actions:
        z = predict_next(z, a_hv)
        out.append(z)
    return out


def rollout_phase(
    theta0: PhaseVector,
    action_phases: Sequence[PhaseVector],
    counter: Optional[OpCounter] = None,
) -> PhaseVector:
    """theta0 + sum of action phases, wrapped once regardless of horizon."""
    if not action_phases:
        raise ValueError("Rollout needs at least one action")
    total = theta0.phases + np.sum(np.stack([p.phases for p in action_phases]), axis=0)
    if counter is not None:
        counter.canonicalize += 1
    return PhaseVector(total)


def _first_max(sims: np.ndarray) -> np.ndarray:
    """Row-wise argmax; near-ties resolve to the lowest index."""
    sims = np.atleast_2d(sims)
    best = np.max(sims, axis=1, keepdims=True)
    return np.argmax(sims >= best - TIE_TOLERANCE, axis=1)


def cleanup(z: LatentState, cb: Codebook) -> tuple[int, LatentState]:
    """Most similar codebook row and that exact row as the cleaned latent."""
    if len(cb) == 0:
        raise ValueError("Cannot clean up against an empty codebook")
    if z.dim != cb.dim:
        raise HypervectorError(f"Latent dimension {z.dim} != codebook dimension {cb.dim}")
    index = int(_first_max(cb.similarities(z.hv.as_complex()))[0])
    provenance = Provenance.CLEAN if z.provenance is Provenance.CLEAN else Provenance.CLEANED
    return index, LatentState(cb.row(index), provenance)


def add_noise(z: LatentState, sigma: float, seed: int = 0) -> LatentState:
    """i.i.d. N(0, sigma) on every real and imaginary component."""
    if sigma < 0:
        raise ValueError(f"Noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return z
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=(2, z.dim))
    hv = ComplexHV(z.hv.re + noise[0], z.hv.im + noise[1], unitary=False)
    return LatentState(hv, Provenance.NOISY)


# ============================================================================
# Batched rollout core
# ============================================================================

Z = TypeVar("Z")


def rollout_core(
    z0: Z,
    horizon: int,
    transition: Callable[[Z, int], Z],
    decode: Callable[[Z], tuple[np.ndarray, Z]],
    score: Callable[[Z, int], np.ndarray],
    true_states: np.ndarray,
    policy: CleanupPolicy,
) -> list[RolloutResult]:
    """
    Shared rollout loop over a batch of n latents.

    transition(z, t) applies the t-th action (0-based), decode(z) returns argmax indices
    and cleaned latents, score(z, t) returns similarity of each latent to its true
    embedding at step t. true_states is (n, horizon).
    """
    if horizon < 1:
        raise ValueError(f"Rollout horizon must be >= 1, got {horizon}")
    true_states = np.asarray(true_states, dtype=np.int64).reshape(-1, horizon)
    n = true_states.shape[0]
    decoded = np.zeros((n, horizon), dtype=np.int64)
    sims = np.zeros((n, horizon))
    z = z0
    for t in range(horizon):
        z = transition(z, t)
        idx, cleaned = decode(z)
        decoded[:, t] = idx
        sims[:, t] = score(z, t)
        if policy.due(t + 1):
            z = cleaned
    return [
        RolloutResult(
            decoded_states=decoded[i].tolist(),
            similarities=sims[i].tolist(),
            true_states=true_states[i].tolist(),
            final_correct=bool(decoded[i, -1] == true_states[i, -1]),
        )
        for i in range(n)
    ]


def rollout_with_cleanup(
    z0: LatentState,
    actions: Sequence[ComplexHV],
    cb: Codebook,
    policy: CleanupPolicy,
    true_states: Sequence[int],
) -> RolloutResult:
    """FHRR rollout that snaps to the codebook every `policy.period` steps."""
    if not actions:
        raise ValueError("Rollout needs at least one action")
    if len(true_states) != len(actions):
        raise ValueError(f"Expected {len(actions)} true states, got {len(true_states)}")
    action_values = [a.as_complex() for a in actions]
    truth = np.asarray(true_states, dtype=np.int64)

    def transition(z, t):
        return z * action_values[t]

    def decode(z):
        idx = _first_max(cb.similarities(z))
        return idx, cb.vectors[idx]

    def score(z, t):
        return np.real(z @ np.conj(cb.vectors[truth[t]])) / cb.dim

    z = z0.hv.as_complex()[None, :]
    return rollout_core(z, len(actions), transition, decode, score, truth[None, :], policy)[0]


# ============================================================================
# Similarity kernel
# ============================================================================

def similarity_profile(
    enc_s: StateEncoder,
    s: int,
    a: int,
    k_min: int,
    k_max: int,
    g: GridSpec,
) -> list[tuple[int, float]]:
    """similarity(phi_S(s), phi_S(s + k a)) for k in [k_min, k_max]; off-grid offsets omitted."""
    if not k_min <= 0 <= k_max:
        raise ValueError(f"Need k_min <= 0 <= k_max, got [{k_min}, {k_max}]")
    row, col = g.to_coords(s)
    dr, dc = ACTION_DELTAS[check_action(a)]
    base = ComplexHV.from_phases(enc_s.theta[:, s])
    profile = []
    for k in range(k_min, k_max + 1):
        r, c = row + k * dr, col + k * dc
        if not g.contains(r, c):
            continue
        other = ComplexHV.from_phases(enc_s.theta[:, g.to_index(r, c)])
        profile.append((k, similarity(base, other)))
    return profile
