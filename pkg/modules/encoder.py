# modules/encoder.py
"""
Encoder - Learnable FHRR state/action encoders and the state codebook.

Inputs are one-hot over states and actions, so encoding a state is a lookup of one
column of the phase table. Parameters are unconstrained reals; they are wrapped into
[-pi, pi) only when a ComplexHV is produced.

Checkpoint layout (little-endian):
    b"HWM1" | u32 D | u32 n_s | u32 n_a | theta_s (D*n_s f64, row-major) | theta_a (D*n_a f64)
A JSON sidecar next to the binary records seed, epoch and loss weights.
"""
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .hypervector import (
    ComplexHV,
    InvalidDimensionError,
    canonicalize,
    phase_encode,
)


logger = logging.getLogger("holoworld.encoder")

CHECKPOINT_MAGIC = b"HWM1"
_HEADER = struct.Struct("<4sIII")


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed."""


# ============================================================================
# Encoders
# ============================================================================

@dataclass(eq=False)
class PhaseTable:
    """A D x n table of phases with a generation counter bumped on every update."""
    theta: np.ndarray
    generation: int = 0

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=np.float64)
        if self.theta.ndim != 2 or min(self.theta.shape) < 1:
            raise InvalidDimensionError(f"Phase table must be 2-D and non-empty, got shape {self.theta.shape}")

    @property
    def dim(self) -> int:
        return int(self.theta.shape[0])

    @property
    def size(self) -> int:
        return int(self.theta.shape[1])

    def _check_index(self, index: int, kind: str) -> int:
        if not isinstance(index, (int, np.integer)) or not 0 <= index < self.size:
            raise IndexError(f"{kind} index {index!r} out of range [0, {self.size})")
        return int(index)

    def column_phases(self, index: int) -> np.ndarray:
        return canonicalize(self.theta[:, index])

    def canonical(self) -> np.ndarray:
        return canonicalize(self.theta)

    def update(self, theta: np.ndarray) -> None:
        """Replace parameters (single writer: the training loop)."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != self.theta.shape:
            raise ValueError(f"Shape mismatch: {theta.shape} != {self.theta.shape}")
        self.theta = theta.copy()
        self.generation += 1

    def snapshot(self):
        """Read-only copy safe to share across evaluation threads."""
        snap = type(self)(self.theta, generation=self.generation)
        snap.theta.flags.writeable = False
        return snap


@dataclass(eq=False)
class StateEncoder(PhaseTable):
    """theta_s: D x n_s."""

    @property
    def theta_s(self) -> np.ndarray:
        return self.theta


@dataclass(eq=False)
class ActionEncoder(PhaseTable):
    """theta_a: D x n_a."""

    @property
    def theta_a(self) -> np.ndarray:
        return self.theta


def new_encoders(dim: int, n_states: int, n_actions: int, seed: int = 0) -> tuple[StateEncoder, ActionEncoder]:
    """Sample both phase tables i.i.d. from Unif(-pi, pi)."""
    for name, value in (("D", dim), ("n_s", n_states), ("n_a", n_actions)):
        if not isinstance(value, (int, np.integer)) or value < 1:
            raise InvalidDimensionError(f"{name} must be a positive integer, got {value!r}")
    rng = np.random.default_rng(seed)
    theta_s = rng.uniform(-np.pi, np.pi, size=(dim, n_states))
    theta_a = rng.uniform(-np.pi, np.pi, size=(dim, n_actions))
    return StateEncoder(theta_s), ActionEncoder(theta_a)


def one_hot(index: int, n: int) -> np.ndarray:
    if not 0 <= index < n:
        raise IndexError(f"index {index} out of range [0, {n})")
    v = np.zeros(n)
    v[index] = 1.0
    return v


def encode_state(enc: StateEncoder, s: int) -> ComplexHV:
    s = enc._check_index(s, "state")
    return ComplexHV.from_phases(enc.theta[:, s])


def encode_action(enc: ActionEncoder, a: int) -> ComplexHV:
    a = enc._check_index(a, "action")
    return ComplexHV.from_phases(enc.theta[:, a])


def encode_one_hot(enc: PhaseTable, x: np.ndarray) -> ComplexHV:
    """General path: phase_encode of an arbitrary input through the table."""
    return phase_encode(x, enc.theta)


def parameter_count(enc_s: StateEncoder, enc_a: ActionEncoder) -> int:
    return int(enc_s.theta.size + enc_a.theta.size)


# ============================================================================
# Codebook
# ============================================================================

@dataclass(eq=False)
class Codebook:
    """
    Rows are the current state embeddings, row s = encode_state(s).

    `generation` is the encoder generation the rows were built from.
    """
    phases: np.ndarray
    vectors: np.ndarray = field(init=False)
    generation: int = 0

    def __post_init__(self):
        self.phases = canonicalize(self.phases)
        self.vectors = np.exp(1j * self.phases)
        self.phases.flags.writeable = False
        self.vectors.flags.writeable = False

    def __len__(self) -> int:
        return int(self.phases.shape[0])

    @property
    def dim(self) -> int:
        return int(self.phases.shape[1])

    def row(self, s: int) -> ComplexHV:
        return ComplexHV.from_phases(self.phases[s])

    def similarities(self, z: np.ndarray) -> np.ndarray:
        """Re<z, row>/D for each row; z is (D,) or (n, D) complex."""
        return np.real(np.asarray(z) @ np.conj(self.vectors).T) / self.dim

    def is_stale(self, enc: StateEncoder) -> bool:
        return self.generation != enc.generation


def build_codebook(enc: StateEncoder) -> Codebook:
    return Codebook(enc.theta.T.copy(), generation=enc.generation)


class CodebookCache:
    """Rebuilds the codebook lazily whenever the encoder generation moves."""

    def __init__(self, enc: StateEncoder):
        self.enc = enc
        self._codebook: Optional[Codebook] = None

    def get(self) -> Codebook:
        if self._codebook is None or self._codebook.is_stale(self.enc):
            self._codebook = build_codebook(self.enc)
        return self._codebook


# ============================================================================
# Checkpoints
# ============================================================================

def save_checkpoint(
    path: Path,
    enc_s: StateEncoder,
    enc_a: ActionEncoder,
    metadata: Optional[dict[str, Any]] = None,
) -> Path:
    """Write the HWM1 binary plus a JSON sidecar (<path>.json)."""
    if enc_s.dim != enc_a.dim:
        raise CheckpointError(f"Encoder dimensions differ: {enc_s.dim} != {enc_a.dim}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(CHECKPOINT_MAGIC, enc_s.dim, enc_s.size, enc_a.size))
        f.write(np.ascontiguousarray(enc_s.theta, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(enc_a.theta, dtype="<f8").tobytes())

    sidecar = sidecar_path(path)
    with open(sidecar, "w", encoding="utf-8") as f:
        json.dump(metadata or {}, f, indent=2, sort_keys=True)
    logger.info(f"Checkpoint saved - path={path.name} D={enc_s.dim} n_s={enc_s.size} n_a={enc_a.size}")
    return path


def load_checkpoint(path: Path) -> tuple[StateEncoder, ActionEncoder, dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointError(f"Checkpoint truncated: {path}")
    magic, dim, n_s, n_a = _HEADER.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"Bad magic {magic!r} in {path}, expected {CHECKPOINT_MAGIC!r}")
    expected = _HEADER.size + 8 * dim * (n_s + n_a)
    if len(data) != expected:
        raise CheckpointError(f"Checkpoint size {len(data)} != expected {expected}: {path}")

    offset = _HEADER.size
    theta_s = np.frombuffer(data, dtype="<f8", count=dim * n_s, offset=offset).reshape(dim, n_s)
    offset += 8 * dim * n_s
    theta_a = np.frombuffer(data, dtype="<f8", count=dim * n_a, offset=offset).reshape(dim, n_a)

    metadata: dict[str, Any] = {}
    sidecar = sidecar_path(path)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as f:
            metadata = json.load(f)
    return StateEncoder(theta_s.astype(np.float64)), ActionEncoder(theta_a.astype(np.float64)), metadata


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")
