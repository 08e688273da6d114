"""
Tests for latent transitions, rollouts, cleanup and noise.
"""
import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from modules.dynamics import (
    CleanupPolicy,
    LatentState,
    OpCounter,
    Provenance,
    add_noise,
    cleanup,
    predict_next,
    rollout_embedding,
    rollout_phase,
    rollout_with_cleanup,
    similarity_profile,
)
from modules.encoder import Codebook, build_codebook, encode_action, encode_state, new_encoders
from modules.gridworld import Action, rollout_states, sample_trials
from modules.hypervector import ComplexHV, HypervectorError, PhaseVector, random_phase_vector, similarity
from modules.world_model import FhrrWorldModel, batch_rollout


class TestPolicy:
    """Tests for the cleanup schedule."""

    def test_period_two(self):
        policy = CleanupPolicy(2)
        assert [policy.due(k) for k in range(1, 7)] == [False, True, False, True, False, True]

    def test_disabled(self):
        policy = CleanupPolicy.disabled()
        assert not policy.enabled
        assert not any(policy.due(k) for k in range(1, 10))

    def test_invalid_period(self):
        with pytest.raises(ValueError):
            CleanupPolicy(0)


class TestRollout:
    """Tests for multi-step latent prediction."""

    def test_predict_next_matches_encoding(self, lattice):
        enc_s, enc_a = lattice
        z = LatentState(encode_state(enc_s, 55))
        nxt = predict_next(z, encode_action(enc_a, Action.RIGHT))
        assert similarity(nxt.hv, encode_state(enc_s, 56)) == pytest.approx(1.0)
        assert nxt.provenance is Provenance.CLEAN

    def test_phase_and_embedding_rollouts_agree(self):
        for trial in range(100):
            rng = np.random.default_rng(trial)
            theta0 = random_phase_vector(64, seed=trial)
            actions = [random_phase_vector(64, seed=10_000 + int(k)) for k in rng.integers(4, size=100)]
            counter = OpCounter()
            by_phase = rollout_phase(theta0, actions, counter)
            by_embedding = rollout_embedding(LatentState(theta0.to_complex()), [a.to_complex() for a in actions])
            assert len(by_embedding) == 100
            assert np.max(np.abs(by_phase.to_complex().as_complex() - by_embedding[-1].hv.as_complex())) < 1e-9
            assert counter.canonicalize == 1

    def test_action_order_does_not_change_final_latent(self):
        z0 = LatentState(random_phase_vector(128, seed=1).to_complex())
        rng = np.random.default_rng(4)
        actions = [random_phase_vector(128, seed=100 + int(k)).to_complex() for k in rng.integers(4, size=30)]
        shuffled = [actions[i] for i in rng.permutation(len(actions))]
        final = rollout_embedding(z0, actions)[-1].hv.as_complex()
        final_shuffled = rollout_embedding(z0, shuffled)[-1].hv.as_complex()
        assert np.max(np.abs(final - final_shuffled)) < 1e-9

    def test_binding_keeps_provenance(self):
        enc_s, enc_a = new_encoders(64, 10, 4, seed=0)
        cb = build_codebook(enc_s)
        a_hv = encode_action(enc_a, Action.UP)
        noisy = add_noise(LatentState(cb.row(3)), 0.2, seed=1)
        assert predict_next(noisy, a_hv).provenance is Provenance.NOISY
        _, cleaned = cleanup(noisy, cb)
        assert predict_next(cleaned, a_hv).provenance is Provenance.CLEANED

    def test_empty_actions(self):
        with pytest.raises(ValueError):
            rollout_embedding(LatentState(random_phase_vector(8).to_complex()), [])
        with pytest.raises(ValueError):
            rollout_phase(random_phase_vector(8), [])

    def test_rollout_with_cleanup_on_exact_lattice(self, grid, lattice):
        enc_s, enc_a = lattice
        actions = [Action.RIGHT, Action.RIGHT, Action.DOWN, Action.DOWN, Action.LEFT, Action.UP]
        truth = rollout_states(grid, 33, actions)[1:]
        result = rollout_with_cleanup(
            LatentState(encode_state(enc_s, 33)),
            [encode_action(enc_a, a) for a in actions],
            build_codebook(enc_s),
            CleanupPolicy(2),
            truth,
        )
        assert result.decoded_states == truth
        assert result.final_correct
        assert result.steps_correct == len(actions)
        assert all(s == pytest.approx(1.0) for s in result.similarities)

    def test_true_states_length_checked(self, lattice):
        enc_s, enc_a = lattice
        with pytest.raises(ValueError):
            rollout_with_cleanup(
                LatentState(encode_state(enc_s, 0)), [encode_action(enc_a, 0)],
                build_codebook(enc_s), CleanupPolicy(2), [0, 0],
            )


class TestCleanup:
    """Tests for codebook snapping."""

    def test_idempotent(self):
        enc_s, _ = new_encoders(128, 20, 4, seed=1)
        cb = build_codebook(enc_s)
        for s in range(20):
            idx, cleaned = cleanup(LatentState(cb.row(s)), cb)
            assert idx == s
            idx2, cleaned2 = cleanup(cleaned, cb)
            assert idx2 == s
            assert np.array_equal(cleaned2.hv.as_complex(), cleaned.hv.as_complex())

    def test_ties_resolve_to_lowest_index(self):
        phases = random_phase_vector(32, seed=0).phases
        cb = Codebook(np.stack([phases, phases, random_phase_vector(32, seed=1).phases]))
        idx, _ = cleanup(LatentState(ComplexHV.from_phases(phases)), cb)
        assert idx == 0

    def test_noisy_latent_becomes_cleaned(self):
        enc_s, _ = new_encoders(512, 20, 4, seed=2)
        cb = build_codebook(enc_s)
        noisy = add_noise(LatentState(cb.row(7)), 0.5, seed=0)
        assert noisy.provenance is Provenance.NOISY
        idx, cleaned = cleanup(noisy, cb)
        assert idx == 7
        assert cleaned.provenance is Provenance.CLEANED
        assert cleaned.hv.max_modulus_error() < 1e-12

    def test_recovers_state_under_small_phase_noise(self):
        enc_s, _ = new_encoders(512, 100, 4, seed=5)
        cb = build_codebook(enc_s)
        rng = np.random.default_rng(21)
        hits = 0
        for _ in range(100):
            s = int(rng.integers(100))
            noisy = PhaseVector(enc_s.theta[:, s] + rng.normal(0.0, 0.3, size=512)).to_complex()
            idx, _ = cleanup(LatentState(noisy, Provenance.NOISY), cb)
            hits += idx == s
        assert hits >= 99

    def test_error_rate_falls_with_dimension(self):
        def error_rate(dim: int) -> float:
            enc_s, _ = new_encoders(dim, 100, 4, seed=3)
            cb = build_codebook(enc_s)
            rng = np.random.default_rng(11)
            errors = 0
            for trial in range(200):
                s = int(rng.integers(100))
                noisy = PhaseVector(enc_s.theta[:, s] + rng.normal(0.0, 2.4, size=dim)).to_complex()
                idx, _ = cleanup(LatentState(noisy, Provenance.NOISY), cb)
                errors += idx != s
            return errors / 200

        small, large = error_rate(512), error_rate(2048)
        assert small > 0
        assert large < small

    def test_dimension_mismatch(self):
        enc_s, _ = new_encoders(16, 4, 4)
        with pytest.raises(HypervectorError):
            cleanup(LatentState(random_phase_vector(8).to_complex()), build_codebook(enc_s))


class TestNoise:
    """Tests for latent noise injection."""

    def test_zero_sigma_is_identity(self):
        z = LatentState(random_phase_vector(16).to_complex())
        assert add_noise(z, 0.0) is z

    def test_deterministic_per_seed(self):
        z = LatentState(random_phase_vector(16).to_complex())
        a = add_noise(z, 1.0, seed=4)
        b = add_noise(z, 1.0, seed=4)
        assert np.array_equal(a.hv.as_complex(), b.hv.as_complex())

    def test_component_variance(self):
        z = LatentState(random_phase_vector(50_000, seed=1).to_complex())
        diff = add_noise(z, 1.5, seed=9).hv.as_complex() - z.hv.as_complex()
        components = np.concatenate([diff.real, diff.imag])
        assert np.var(components) == pytest.approx(1.5 ** 2, rel=0.05)

    def test_noise_breaks_unitarity(self):
        z = LatentState(random_phase_vector(64).to_complex())
        assert not add_noise(z, 1.0).hv.unitary

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            add_noise(LatentState(random_phase_vector(4).to_complex()), -1.0)


class TestSimilarityProfile:
    """Tests for the displacement kernel."""

    def test_peak_at_zero(self, grid, lattice):
        enc_s, _ = lattice
        for a in Action:
            profile = dict(similarity_profile(enc_s, 55, int(a), -4, 4, grid))
            assert profile[0] == pytest.approx(1.0)
            assert max(profile, key=profile.get) == 0

    def test_off_grid_offsets_omitted(self, grid, lattice):
        enc_s, _ = lattice
        profile = similarity_profile(enc_s, 0, int(Action.UP), -3, 3, grid)
        assert [k for k, _ in profile] == [-3, -2, -1, 0]

    def test_range_must_contain_zero(self, grid, lattice):
        enc_s, _ = lattice
        with pytest.raises(ValueError):
            similarity_profile(enc_s, 0, 0, 1, 3, grid)


class TestBatchRollout:
    """Tests for threaded rollouts over a WorldModel."""

    def test_thread_count_does_not_change_results(self, grid, lattice):
        model = FhrrWorldModel(*lattice)
        trials = sample_trials(grid, 12, 40, seed=1)
        serial = batch_rollout(model, trials, CleanupPolicy(2), threads=1)
        parallel = batch_rollout(model, trials, CleanupPolicy(2), threads=4)
        assert [r.decoded_states for r in serial] == [r.decoded_states for r in parallel]
        assert np.allclose([r.similarities for r in serial], [r.similarities for r in parallel], atol=1e-12)

    def test_matches_single_trial_rollout(self, grid, lattice):
        enc_s, enc_a = lattice
        model = FhrrWorldModel(enc_s, enc_a)
        trial = sample_trials(grid, 8, 1, seed=2)[0]
        batched = batch_rollout(model, [trial], CleanupPolicy.disabled())[0]
        single = rollout_with_cleanup(
            LatentState(encode_state(enc_s, trial.start)),
            [encode_action(enc_a, a) for a in trial.actions],
            build_codebook(enc_s),
            CleanupPolicy.disabled(),
            trial.states[1:],
        )
        assert batched.decoded_states == single.decoded_states
        assert np.allclose(batched.similarities, single.similarities)

    def test_mixed_horizons_rejected(self, grid, lattice):
        trials = sample_trials(grid, 3, 2, seed=0) + sample_trials(grid, 4, 1, seed=0)
        with pytest.raises(ValueError):
            batch_rollout(FhrrWorldModel(*lattice), trials, CleanupPolicy(2))

    def test_empty(self, lattice):
        assert batch_rollout(FhrrWorldModel(*lattice), [], CleanupPolicy(2)) == []


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
