# modules/hypervector.py
"""
Hypervector - FHRR algebra on phase vectors, plus the HRR (circular convolution) backend.

Phases are the source of truth for unitary vectors. They are kept canonical in [-pi, pi)
and the complex (re, im) view is derived from them on demand.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np


TWO_PI = 2.0 * np.pi
UNIT_MODULUS_TOL = 1e-9
HRR_INVERSE_EPS = 1e-12


# ============================================================================
# Errors
# ============================================================================

class HypervectorError(ValueError):
    """Base error for hypervector operations."""


class InvalidDimensionError(HypervectorError):
    """Raised when a requested dimension is not a positive integer."""


class DimensionMismatchError(HypervectorError):
    """Raised when two operands do not share a dimension."""

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right
        super().__init__(f"Dimension mismatch: {left} != {right}")


# ============================================================================
# Types
# ============================================================================

class PhaseDistribution(str, Enum):
    """Distributions available for sampling phases."""
    UNIFORM = "uniform"    # Unif(-pi, pi)
    GAUSSIAN = "gaussian"  # N(0, 1)


def canonicalize(phases: Union[np.ndarray, float]) -> np.ndarray:
    """
    Wrap phases into [-pi, pi).

    +pi maps to -pi. Rounding in np.mod can land exactly on +pi for inputs a hair
    below a multiple of 2*pi, so those are folded back explicitly.
    """
    wrapped = np.mod(np.asarray(phases, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    return np.where(wrapped >= np.pi, wrapped - TWO_PI, wrapped)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """A D-dimensional unitary complex vector stored as its phases."""
    phases: np.ndarray

    def __post_init__(self):
        arr = canonicalize(np.array(self.phases, dtype=np.float64).reshape(-1))
        if arr.size == 0:
            raise InvalidDimensionError("PhaseVector must have at least one component")
        if not np.all(np.isfinite(arr)):
            raise HypervectorError("PhaseVector phases must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "phases", arr)

    @property
    def dim(self) -> int:
        return int(self.phases.shape[0])

    @classmethod
    def identity(cls, dim: int) -> "PhaseVector":
        """All-zero phases: the binding identity."""
        _check_dim(dim)
        return cls(np.zeros(dim))

    def to_complex(self) -> "ComplexHV":
        return ComplexHV.from_phases(self.phases)


@dataclass(frozen=True, eq=False)
class ComplexHV:
    """
    Complex hypervector view with cached real and imaginary parts.

    `unitary` records which contract applies: encoder outputs and bindings of unitary
    vectors are unit-modulus, bundles and noisy latents are not. `phases` is set only
    for unitary vectors and is what bind/inverse operate on.
    """
    re: np.ndarray
    im: np.ndarray
    unitary: bool = False
    phases: Optional[np.ndarray] = None

    def __post_init__(self):
        re = np.array(self.re, dtype=np.float64).reshape(-1)
        im = np.array(self.im, dtype=np.float64).reshape(-1)
        if re.shape != im.shape:
            raise DimensionMismatchError(re.shape[0], im.shape[0])
        if re.size == 0:
            raise InvalidDimensionError("ComplexHV must have at least one component")
        re.flags.writeable = False
        im.flags.writeable = False
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if self.phases is not None:
            ph = canonicalize(self.phases).reshape(-1)
            ph.flags.writeable = False
            object.__setattr__(self, "phases", ph)

    @classmethod
    def from_phases(cls, phases: np.ndarray) -> "ComplexHV":
        ph = canonicalize(phases)
        return cls(np.cos(ph), np.sin(ph), unitary=True, phases=ph)

    @classmethod
    def from_complex(cls, values: np.ndarray, unitary: bool = False) -> "ComplexHV":
        values = np.asarray(values, dtype=np.complex128)
        if unitary:
            return cls.from_phases(np.angle(values))
        return cls(values.real, values.imag, unitary=False)

    @property
    def dim(self) -> int:
        return int(self.re.shape[0])

    def as_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    def conjugate(self) -> "ComplexHV":
        if self.unitary and self.phases is not None:
            return ComplexHV.from_phases(-self.phases)
        return ComplexHV(self.re, -self.im, unitary=False)

    def max_modulus_error(self) -> float:
        return float(np.max(np.abs(self.re ** 2 + self.im ** 2 - 1.0)))


HV = Union[PhaseVector, ComplexHV]


# ============================================================================
# Helpers
# ============================================================================

def _check_dim(dim: int) -> None:
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimensionError(f"Dimension must be a positive integer, got {dim!r}")


def _check_same_dim(a_dim: int, b_dim: int) -> None:
    if a_dim != b_dim:
        raise DimensionMismatchError(a_dim, b_dim)


def _as_complex_hv(v: HV) -> ComplexHV:
    return v.to_complex() if isinstance(v, PhaseVector) else v


# ============================================================================
# FHRR operations
# ============================================================================

def random_phase_vector(
    dim: int,
    dist: PhaseDistribution = PhaseDistribution.UNIFORM,
    seed: int = 0,
) -> PhaseVector:
    """Draw D i.i.d. phases from `dist`; deterministic per seed."""
    _check_dim(dim)
    rng = np.random.default_rng(seed)
    dist = PhaseDistribution(dist)
    if dist is PhaseDistribution.UNIFORM:
        phases = rng.uniform(-np.pi, np.pi, size=dim)
    else:
        phases = rng.normal(0.0, 1.0, size=dim)
    return PhaseVector(phases)


def bind(a: PhaseVector, b: PhaseVector) -> PhaseVector:
    """Element-wise complex multiplication, i.e. phase addition mod 2*pi."""
    _check_same_dim(a.dim, b.dim)
    return PhaseVector(a.phases + b.phases)


def inverse(v: PhaseVector) -> PhaseVector:
    """Complex conjugate: negated phases."""
    return PhaseVector(-v.phases)


def bind_complex(a: ComplexHV, b: ComplexHV) -> ComplexHV:
    """
    Bind two complex views.

    When both are unitary the result is computed on phases so it stays on the unit circle.
    """
    _check_same_dim(a.dim, b.dim)
    if a.unitary and b.unitary and a.phases is not None and b.phases is not None:
        return ComplexHV.from_phases(a.phases + b.phases)
    return ComplexHV.from_complex(a.as_complex() * b.as_complex(), unitary=False)


def bundle(vs: Sequence[HV]) -> ComplexHV:
    """Element-wise complex sum. The result is never flagged unitary."""
    if not vs:
        raise HypervectorError("Cannot bundle an empty list")
    views = [_as_complex_hv(v) for v in vs]
    dim = views[0].dim
    re = np.zeros(dim)
    im = np.zeros(dim)
    for v in views:
        _check_same_dim(dim, v.dim)
        re = re + v.re
        im = im + v.im
    return ComplexHV(re, im, unitary=False)


def similarity(a: HV, b: HV) -> float:
    """(1/D) * Re<a, b> with b conjugated. In [-1, 1] for unitary inputs."""
    a = _as_complex_hv(a)
    b = _as_complex_hv(b)
    _check_same_dim(a.dim, b.dim)
    return float((np.dot(a.re, b.re) + np.dot(a.im, b.im)) / a.dim)


def phase_encode(x: np.ndarray, m: np.ndarray) -> ComplexHV:
    """Random-Fourier-feature style encoding phi(x) = exp(i M x)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != x.shape[0]:
        raise DimensionMismatchError(m.shape[-1] if m.ndim else 0, x.shape[0])
    return ComplexHV.from_phases(m @ x)


def rbf_kernel(x: np.ndarray, y: np.ndarray, bandwidth: float = 1.0) -> float:
    """Analytic RBF kernel that phase_encode approximates when M rows ~ N(0, 1/bandwidth^2)."""
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * bandwidth ** 2)))


def sample_rff_matrix(dim: int, n: int, seed: int = 0, bandwidth: float = 1.0) -> np.ndarray:
    """Sample a D x n frequency matrix from the Gaussian kernel's spectral density."""
    _check_dim(dim)
    _check_dim(n)
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / bandwidth, size=(dim, n))


# ============================================================================
# HRR backend (real vectors, circular convolution)
# ============================================================================

def random_hrr_vector(dim: int, seed: int = 0) -> np.ndarray:
    """Components ~ N(0, 1); normalize with hrr_normalize before binding."""
    _check_dim(dim)
    return np.random.default_rng(seed).normal(0.0, 1.0, size=dim)


def hrr_normalize(v: np.ndarray) -> np.ndarray:
    """Scale by 1/sqrt(D) so that std-1 samples have unit expected norm."""
    v = np.asarray(v, dtype=np.float64)
    return v / np.sqrt(v.shape[-1])


def hrr_identity(dim: int) -> np.ndarray:
    """Unit impulse e_0, the identity of circular convolution."""
    _check_dim(dim)
    e = np.zeros(dim)
    e[0] = 1.0
    return e


def hrr_bind(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Circular convolution along the last axis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_dim(a.shape[-1], b.shape[-1])
    dim = a.shape[-1]
    return np.fft.irfft(np.fft.rfft(a, axis=-1) * np.fft.rfft(b, axis=-1), n=dim, axis=-1)


def hrr_unbind(c: np.ndarray, a: np.ndarray, exact: bool = False) -> np.ndarray:
    """
    Recover b from c = hrr_bind(a, b).

    The default is circular correlation, the adjoint of hrr_bind(a, .), whose result is b plus
    crosstalk (cosine about 1/sqrt(2) for 1/sqrt(D)-normalized Gaussian vectors). With
    exact=True the key's Fourier coefficients are divided out instead, which inverts the
    binding up to rounding.
    """
    c = np.asarray(c, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    _check_same_dim(c.shape[-1], a.shape[-1])
    dim = c.shape[-1]
    fa = np.fft.rfft(a, axis=-1)
    fc = np.fft.rfft(c, axis=-1)
    if not exact:
        return np.fft.irfft(np.conj(fa) * fc, n=dim, axis=-1)
    if np.any(np.abs(fa) < HRR_INVERSE_EPS):
        raise HypervectorError("HRR key has a vanishing Fourier coefficient and no exact inverse")
    return np.fft.irfft(fc / fa, n=dim, axis=-1)


def cosine_similarity(a: np.ndarray, b: np.ndarray, eps: float = 1e-12) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_dim(a.shape[-1], b.shape[-1])
    denom = max(np.linalg.norm(a) * np.linalg.norm(b), eps)
    return float(np.dot(a, b) / denom)
