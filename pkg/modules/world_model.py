# modules/world_model.py
"""
World Model - The interface every model kind exposes to evaluation, plus the FHRR adapter.

Latents are batched arrays of shape (n, D): complex for FHRR, real for HRR and MLP.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Protocol, Sequence

import numpy as np

from .dynamics import CleanupPolicy, RolloutResult, _first_max, rollout_core
from .encoder import ActionEncoder, CodebookCache, StateEncoder, parameter_count
from .gridworld import Trajectory


logger = logging.getLogger("holoworld.world_model")


class WorldModel(Protocol):
    kind: str

    @property
    def n_states(self) -> int: ...

    def embed(self, states: np.ndarray) -> np.ndarray:
        """Embeddings of the given states, one row each."""

    def transition(self, z: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Predicted next latents for each (row, action)."""

    def decode(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Argmax state per row and the corresponding codebook rows."""

    def score(self, z: np.ndarray, states: np.ndarray) -> np.ndarray:
        """Similarity of each row to the embedding of the matching state."""

    def perturb(self, z: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
        """Additive Gaussian noise on every real component."""

    def parameter_count(self) -> int: ...


class FhrrWorldModel:
    """FHRR encoders behind the WorldModel interface."""

    kind = "fhrr"

    def __init__(self, enc_s: StateEncoder, enc_a: ActionEncoder):
        if enc_s.dim != enc_a.dim:
            raise ValueError(f"Encoder dimensions differ: {enc_s.dim} != {enc_a.dim}")
        self.enc_s = enc_s
        self.enc_a = enc_a
        self._codebooks = CodebookCache(enc_s)

    @property
    def n_states(self) -> int:
        return self.enc_s.size

    @property
    def dim(self) -> int:
        return self.enc_s.dim

    @property
    def codebook(self):
        return self._codebooks.get()

    def embed(self, states):
        return np.exp(1j * self.enc_s.theta[:, np.asarray(states, dtype=np.int64)]).T

    def action_vectors(self, actions):
        return np.exp(1j * self.enc_a.theta[:, np.asarray(actions, dtype=np.int64)]).T

    def transition(self, z, actions):
        return z * self.action_vectors(actions)

    def decode(self, z):
        cb = self.codebook
        idx = _first_max(cb.similarities(z))
        return idx, cb.vectors[idx]

    def score(self, z, states):
        targets = self.codebook.vectors[np.asarray(states, dtype=np.int64)]
        return np.real(np.sum(z * np.conj(targets), axis=1)) / self.dim

    def perturb(self, z, sigma, rng):
        if sigma == 0:
            return z
        noise = rng.normal(0.0, sigma, size=(2,) + z.shape)
        return z + noise[0] + 1j * noise[1]

    def parameter_count(self) -> int:
        return parameter_count(self.enc_s, self.enc_a)


def _rollout_chunk(model: WorldModel, trials: Sequence[Trajectory], policy: CleanupPolicy) -> list[RolloutResult]:
    horizon = len(trials[0].actions)
    actions = np.array([[int(a) for a in t.actions] for t in trials], dtype=np.int64)
    truth = np.array([t.states[1:] for t in trials], dtype=np.int64)
    starts = np.array([t.start for t in trials], dtype=np.int64)
    return rollout_core(
        model.embed(starts),
        horizon,
        transition=lambda z, t: model.transition(z, actions[:, t]),
        decode=model.decode,
        score=lambda z, t: model.score(z, truth[:, t]),
        true_states=truth,
        policy=policy,
    )


def batch_rollout(
    model: WorldModel,
    trials: Sequence[Trajectory],
    policy: CleanupPolicy,
    threads: Optional[int] = None,
) -> list[RolloutResult]:
    """
    Roll out every trial in latent space.

    Trials are split into contiguous chunks, one per thread, and results are returned in
    trial order, so the output does not depend on the thread count.
    """
    if not trials:
        return []
    horizons = {len(t.actions) for t in trials}
    if len(horizons) != 1:
        raise ValueError(f"All trials must share a horizon, got {sorted(horizons)}")
    threads = max(1, min(threads or 1, len(trials)))
    if threads == 1:
        return _rollout_chunk(model, trials, policy)

    bounds = np.linspace(0, len(trials), threads + 1).astype(int)
    chunks = [trials[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    logger.debug(f"Parallel rollout - model={model.kind} trials={len(trials)} threads={len(chunks)}")
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: _rollout_chunk(model, c, policy), chunks))
    return [r for part in parts for r in part]
