"""
Tests for the FHRR algebra, the RFF kernel link and the HRR backend.
"""
import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from modules.hypervector import (
    ComplexHV,
    DimensionMismatchError,
    HypervectorError,
    InvalidDimensionError,
    PhaseDistribution,
    PhaseVector,
    bind,
    bind_complex,
    bundle,
    canonicalize,
    cosine_similarity,
    hrr_bind,
    hrr_identity,
    hrr_normalize,
    hrr_unbind,
    inverse,
    phase_encode,
    random_hrr_vector,
    random_phase_vector,
    rbf_kernel,
    sample_rff_matrix,
    similarity,
)


N_CASES = 100


def _circular_close(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """Phase equality modulo 2*pi."""
    return bool(np.max(np.abs(np.angle(np.exp(1j * (a - b))))) < tol)


class TestCanonicalize:
    """Tests for phase wrapping."""

    def test_range(self):
        """All outputs land in [-pi, pi)."""
        x = np.linspace(-50, 50, 10001)
        out = canonicalize(x)
        assert np.all(out >= -np.pi)
        assert np.all(out < np.pi)

    def test_plus_pi_maps_to_minus_pi(self):
        assert canonicalize(np.pi) == pytest.approx(-np.pi)

    def test_preserves_angle(self):
        x = np.random.default_rng(1).normal(0, 20, size=1000)
        assert _circular_close(canonicalize(x), x)


class TestRandomPhaseVector:
    """Tests for sampling."""

    def test_deterministic_per_seed(self):
        a = random_phase_vector(64, seed=3)
        b = random_phase_vector(64, seed=3)
        assert np.array_equal(a.phases, b.phases)

    def test_different_seeds_differ(self):
        assert not np.array_equal(random_phase_vector(64, seed=1).phases, random_phase_vector(64, seed=2).phases)

    def test_gaussian_distribution(self):
        v = random_phase_vector(128, PhaseDistribution.GAUSSIAN, seed=0)
        assert v.dim == 128
        assert np.all(v.phases >= -np.pi) and np.all(v.phases < np.pi)

    def test_gaussian_sample_statistics(self):
        v = random_phase_vector(10000, PhaseDistribution.GAUSSIAN, seed=1)
        assert abs(float(np.mean(v.phases))) < 0.05
        assert float(np.std(v.phases)) == pytest.approx(1.0, abs=0.05)

    def test_unit_modulus(self):
        hv = random_phase_vector(512, seed=0).to_complex()
        assert hv.max_modulus_error() < 1e-12

    @pytest.mark.parametrize("dim", [0, -3, 2.5])
    def test_invalid_dimension(self, dim):
        with pytest.raises(InvalidDimensionError):
            random_phase_vector(dim)

    def test_self_similarity_is_one(self):
        v = random_phase_vector(256, seed=4)
        assert similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_quasi_orthogonal(self):
        """Distinct random vectors at D=4096 have similarity well under 0.1."""
        a = random_phase_vector(4096, seed=10)
        b = random_phase_vector(4096, seed=11)
        assert abs(similarity(a, b)) < 0.1

    def test_pairwise_similarity_bound_at_512(self):
        """Over 1000 independent pairs, |similarity| stays below 3/sqrt(D) at least 99% of the time."""
        bound = 3.0 / np.sqrt(512)
        sims = np.array([
            similarity(random_phase_vector(512, seed=2 * i), random_phase_vector(512, seed=2 * i + 1))
            for i in range(1000)
        ])
        assert np.mean(np.abs(sims) < bound) > 0.99

    def test_similarity_variance_shrinks_with_dimension(self):
        """Quadrupling D cuts the cross-similarity variance to about a quarter."""
        def cross_variance(dim: int) -> float:
            z = np.exp(1j * np.stack([random_phase_vector(dim, seed=s).phases for s in range(200)]))
            sims = np.real(z @ z.conj().T) / dim
            return float(np.var(sims[np.triu_indices(200, k=1)]))

        ratio = cross_variance(2048) / cross_variance(512)
        assert 0.15 <= ratio <= 0.4


class TestBindingAlgebra:
    """Randomized algebra suite."""

    def test_commutative(self):
        for i in range(N_CASES):
            a = random_phase_vector(64, seed=i)
            b = random_phase_vector(64, seed=i + 1000)
            assert _circular_close(bind(a, b).phases, bind(b, a).phases)

    def test_associative(self):
        for i in range(N_CASES):
            a = random_phase_vector(64, seed=i)
            b = random_phase_vector(64, seed=i + 1000)
            c = random_phase_vector(64, seed=i + 2000)
            assert _circular_close(bind(bind(a, b), c).phases, bind(a, bind(b, c)).phases)

    def test_inverse_is_exact(self):
        for i in range(N_CASES):
            a = random_phase_vector(64, seed=i)
            ident = bind(a, inverse(a))
            assert _circular_close(ident.phases, np.zeros(64))

    def test_identity(self):
        for i in range(N_CASES):
            a = random_phase_vector(64, seed=i)
            assert _circular_close(bind(a, PhaseVector.identity(64)).phases, a.phases)

    def test_unbinding_recovers_operand(self):
        for i in range(N_CASES):
            a = random_phase_vector(64, seed=i)
            b = random_phase_vector(64, seed=i + 1000)
            assert _circular_close(bind(bind(a, b), inverse(a)).phases, b.phases)

    def test_binding_preserves_unitarity(self):
        for i in range(N_CASES):
            a = random_phase_vector(64, seed=i).to_complex()
            b = random_phase_vector(64, seed=i + 1000).to_complex()
            c = bind_complex(a, b)
            assert c.unitary
            assert c.max_modulus_error() < 1e-9

    def test_bind_complex_matches_phase_bind(self):
        a = random_phase_vector(32, seed=1)
        b = random_phase_vector(32, seed=2)
        expected = bind(a, b).to_complex().as_complex()
        assert np.allclose(bind_complex(a.to_complex(), b.to_complex()).as_complex(), expected, atol=1e-12)

    def test_non_unitary_bind_is_complex_product(self):
        a = ComplexHV.from_complex(np.array([1 + 1j, 2.0, -1j]))
        b = ComplexHV.from_complex(np.array([1j, 0.5, 2.0]))
        out = bind_complex(a, b)
        assert not out.unitary
        assert np.allclose(out.as_complex(), a.as_complex() * b.as_complex())

    def test_binding_is_dissimilar_to_operands(self):
        a = random_phase_vector(2048, seed=1)
        b = random_phase_vector(2048, seed=2)
        c = bind(a, b)
        assert abs(similarity(c, a)) < 0.1
        assert abs(similarity(c, b)) < 0.1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            bind(random_phase_vector(8), random_phase_vector(16))
        with pytest.raises(DimensionMismatchError):
            similarity(random_phase_vector(8), random_phase_vector(16))


class TestBundle:
    """Tests for superposition."""

    def test_bundle_is_similar_to_members(self):
        vs = [random_phase_vector(2048, seed=i) for i in range(3)]
        b = bundle(vs)
        for v in vs:
            assert similarity(b, v) > 0.8
        assert abs(similarity(b, random_phase_vector(2048, seed=99))) < 0.2

    def test_bundle_not_unitary(self):
        b = bundle([random_phase_vector(16, seed=1), random_phase_vector(16, seed=2)])
        assert not b.unitary

    def test_empty_bundle(self):
        with pytest.raises(HypervectorError):
            bundle([])

    def test_conjugate_of_bundle(self):
        b = bundle([random_phase_vector(16, seed=1), random_phase_vector(16, seed=2)])
        assert np.allclose(b.conjugate().as_complex(), np.conj(b.as_complex()))


class TestKernel:
    """Random-Fourier-feature similarity approximates the RBF kernel."""

    def _rff_errors(self, dim: int, n_pairs: int = 50, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        m = sample_rff_matrix(dim, 3, seed=seed + 1)
        errors = []
        for _ in range(n_pairs):
            x = rng.normal(0, 0.7, size=3)
            y = rng.normal(0, 0.7, size=3)
            errors.append(similarity(phase_encode(x, m), phase_encode(y, m)) - rbf_kernel(x, y))
        return np.array(errors)

    def test_close_to_rbf_at_10k(self):
        errors = self._rff_errors(10_000)
        assert np.max(np.abs(errors)) < 0.05

    def test_error_halves_when_dim_quadruples(self):
        rms_small = np.sqrt(np.mean(self._rff_errors(10_000, seed=5) ** 2))
        rms_large = np.sqrt(np.mean(self._rff_errors(40_000, seed=5) ** 2))
        ratio = rms_large / rms_small
        assert 0.25 <= ratio <= 0.75

    def test_identical_inputs(self):
        m = sample_rff_matrix(128, 2, seed=0)
        x = np.array([0.3, -1.2])
        assert similarity(phase_encode(x, m), phase_encode(x, m)) == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            phase_encode(np.zeros(3), np.zeros((8, 2)))


class TestHrr:
    """Tests for the circular-convolution backend."""

    def test_impulse_is_identity(self):
        a = hrr_normalize(random_hrr_vector(256, seed=1))
        assert np.allclose(hrr_bind(a, hrr_identity(256)), a, atol=1e-12)

    def test_bind_commutative(self):
        a = hrr_normalize(random_hrr_vector(128, seed=1))
        b = hrr_normalize(random_hrr_vector(128, seed=2))
        assert np.allclose(hrr_bind(a, b), hrr_bind(b, a), atol=1e-12)

    def test_bind_matches_direct_convolution(self):
        a = random_hrr_vector(16, seed=3)
        b = random_hrr_vector(16, seed=4)
        direct = np.array([sum(a[j] * b[(k - j) % 16] for j in range(16)) for k in range(16)])
        assert np.allclose(hrr_bind(a, b), direct, atol=1e-10)

    def test_correlation_unbind_crosstalk_band(self):
        """Correlation leaves crosstalk: recovery cosine sits near 1/sqrt(2) at D=512."""
        cosines = []
        for i in range(50):
            a = hrr_normalize(random_hrr_vector(512, seed=2 * i))
            b = hrr_normalize(random_hrr_vector(512, seed=2 * i + 1))
            cosines.append(cosine_similarity(hrr_unbind(hrr_bind(a, b), a), b))
        assert 0.6 < np.mean(cosines) < 0.8
        assert min(cosines) > 0.5

    def test_exact_unbind_recovers(self):
        for i in range(50):
            a = hrr_normalize(random_hrr_vector(512, seed=2 * i))
            b = hrr_normalize(random_hrr_vector(512, seed=2 * i + 1))
            assert cosine_similarity(hrr_unbind(hrr_bind(a, b), a, exact=True), b) > 0.9

    def test_exact_unbind_of_impulse(self):
        b = hrr_normalize(random_hrr_vector(64, seed=7))
        assert np.allclose(hrr_unbind(b, hrr_identity(64), exact=True), b, atol=1e-12)

    def test_exact_unbind_rejects_singular_key(self):
        with pytest.raises(HypervectorError):
            hrr_unbind(np.ones(8), np.zeros(8), exact=True)

    def test_normalized_norm_near_one(self):
        v = hrr_normalize(random_hrr_vector(4096, seed=0))
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=0.05)

    def test_cosine_of_zero_vector(self):
        assert cosine_similarity(np.zeros(4), np.ones(4)) == 0.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
