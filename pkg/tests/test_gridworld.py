"""
Tests for the grid environment, zero-shot splits and trajectory sampling.
"""
import json
import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from modules.gridworld import (
    Action,
    GridError,
    GridSpec,
    enumerate_transitions,
    inverse_action,
    inverse_pairs,
    read_dataset_csv,
    rollout_states,
    sample_trajectory,
    sample_trials,
    step,
    write_dataset_csv,
    zero_shot_split,
)


GOLDEN_DIR = Path(__file__).parent / "golden"


def oracle_next(rows: int, cols: int, s: int, a: int) -> int:
    """Independent nested-if transition oracle."""
    r, c = s // cols, s % cols
    if a == 0 and r > 0:
        r -= 1
    elif a == 1 and r < rows - 1:
        r += 1
    elif a == 2 and c > 0:
        c -= 1
    elif a == 3 and c < cols - 1:
        c += 1
    return r * cols + c


class TestStep:
    """Tests for the deterministic transition function."""

    def test_all_transitions_match_oracle(self, grid):
        transitions = enumerate_transitions(grid)
        assert len(transitions) == 400
        for t in transitions:
            assert t.s_next == oracle_next(10, 10, t.s, int(t.a))

    def test_lexicographic_order(self, grid):
        transitions = enumerate_transitions(grid)
        keys = [(t.s, int(t.a)) for t in transitions]
        assert keys == sorted(keys)

    def test_golden_2x2(self):
        golden = json.loads((GOLDEN_DIR / "transitions_2x2.json").read_text())
        g = GridSpec(golden["rows"], golden["cols"])
        for s, row in enumerate(golden["next_state"]):
            for a, expected in enumerate(row):
                assert step(g, s, a) == expected

    def test_corner_clamps(self, grid):
        assert step(grid, 0, Action.UP) == 0
        assert step(grid, 0, Action.LEFT) == 0
        assert step(grid, 99, Action.DOWN) == 99
        assert step(grid, 99, Action.RIGHT) == 99

    def test_interior_moves(self, grid):
        assert step(grid, 55, Action.UP) == 45
        assert step(grid, 55, Action.DOWN) == 65
        assert step(grid, 55, Action.LEFT) == 54
        assert step(grid, 55, Action.RIGHT) == 56

    def test_invalid_state(self, grid):
        with pytest.raises(GridError):
            step(grid, 100, 0)

    def test_invalid_action(self, grid):
        with pytest.raises(GridError):
            step(grid, 0, 4)

    def test_invalid_grid(self):
        with pytest.raises(GridError):
            GridSpec(0, 5)

    def test_inverses(self, grid):
        for s in grid.interior_states():
            for a in Action:
                assert step(grid, step(grid, s, a), inverse_action(a)) == s

    def test_inverse_pairs(self):
        assert inverse_pairs() == [(Action.UP, Action.DOWN), (Action.LEFT, Action.RIGHT)]

    def test_interior_count(self, grid):
        assert len(grid.interior_states()) == 64


class TestZeroShotSplit:
    """Tests for holdout partitioning."""

    def test_partition_exact(self, grid):
        transitions = enumerate_transitions(grid)
        split = zero_shot_split(transitions, 0.2, seed=0)
        assert len(split.holdout) == 80
        assert len(split.train) == 320
        train_keys = {(t.s, int(t.a)) for t in split.train}
        holdout_keys = {(t.s, int(t.a)) for t in split.holdout}
        assert not train_keys & holdout_keys
        assert train_keys | holdout_keys == {(t.s, int(t.a)) for t in transitions}

    def test_deterministic(self, grid):
        transitions = enumerate_transitions(grid)
        a = zero_shot_split(transitions, 0.2, seed=4)
        b = zero_shot_split(transitions, 0.2, seed=4)
        assert a.holdout == b.holdout

    def test_seed_changes_split(self, grid):
        transitions = enumerate_transitions(grid)
        assert zero_shot_split(transitions, 0.2, seed=1).holdout != zero_shot_split(transitions, 0.2, seed=2).holdout

    def test_ratio_zero(self, grid):
        split = zero_shot_split(enumerate_transitions(grid), 0.0)
        assert split.holdout == []
        assert len(split.train) == 400

    @pytest.mark.parametrize("ratio", [-0.1, 1.0, 1.5])
    def test_invalid_ratio(self, grid, ratio):
        with pytest.raises(GridError):
            zero_shot_split(enumerate_transitions(grid), ratio)

    def test_n_states(self, grid):
        split = zero_shot_split(enumerate_transitions(grid), 0.2)
        assert split.n_states == 100
        assert len(split.all_transitions) == 400

    def test_dataset_csv_round_trip(self, small_split, tmp_path):
        path = write_dataset_csv(small_split, tmp_path / "data.csv")
        loaded = read_dataset_csv(path)
        assert sorted(loaded.train) == sorted(small_split.train)
        assert sorted(loaded.holdout) == sorted(small_split.holdout)

    def test_dataset_csv_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(GridError):
            read_dataset_csv(path)


class TestTrajectories:
    """Tests for trajectory sampling."""

    def test_states_follow_step(self, grid):
        traj = sample_trajectory(grid, 30, seed=2)
        assert len(traj.actions) == 30
        assert len(traj.states) == 31
        assert traj.states[0] == traj.start
        assert traj.states == rollout_states(grid, traj.start, traj.actions)

    def test_deterministic(self, grid):
        a = sample_trajectory(grid, 10, seed=5)
        b = sample_trajectory(grid, 10, seed=5)
        assert a.start == b.start and a.actions == b.actions

    def test_trials_are_individually_reproducible(self, grid):
        trials = sample_trials(grid, 5, 20, seed=3)
        assert len(trials) == 20
        again = sample_trajectory(grid, 5, seed=[3, 7])
        assert trials[7].actions == again.actions
        assert trials[7].start == again.start

    def test_action_frequencies_uniform(self, grid):
        actions = sample_trajectory(grid, 10000, seed=0).actions
        counts = np.bincount([int(a) for a in actions], minlength=4)
        assert np.all(np.abs(counts / 10000 - 0.25) < 0.02)

    def test_invalid_length(self, grid):
        with pytest.raises(GridError):
            sample_trajectory(grid, 0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
