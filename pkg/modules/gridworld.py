# modules/gridworld.py
"""
GridWorld - Deterministic bounded grid, transition enumeration, zero-shot splits,
and trajectory sampling.

Actions: 0=up, 1=down, 2=left, 3=right. "up" decreases the row index.
Moves that would leave the grid keep the agent in place.
"""
import csv
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np


N_ACTIONS = 4
DATASET_CSV_HEADER = ["s", "a", "s_next", "split"]


class GridError(ValueError):
    """Raised for invalid grid, state or action arguments."""


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


ACTION_DELTAS: dict[Action, tuple[int, int]] = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}

_INVERSES = {
    Action.UP: Action.DOWN,
    Action.DOWN: Action.UP,
    Action.LEFT: Action.RIGHT,
    Action.RIGHT: Action.LEFT,
}


@dataclass(frozen=True)
class GridSpec:
    """rows x cols grid; index = row * cols + col."""
    rows: int = 10
    cols: int = 10

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise GridError(f"Grid dimensions must be positive, got {self.rows}x{self.cols}")

    @property
    def n_states(self) -> int:
        return self.rows * self.cols

    def to_coords(self, s: int) -> tuple[int, int]:
        self.check_state(s)
        return divmod(int(s), self.cols)

    def to_index(self, row: int, col: int) -> int:
        if not self.contains(row, col):
            raise GridError(f"Cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def contains(self, row: int, col: int) -> bool:
        return 0 <= row < self.rows and 0 <= col < self.cols

    def check_state(self, s: int) -> int:
        if not isinstance(s, (int, np.integer)) or not 0 <= s < self.n_states:
            raise GridError(f"State {s!r} out of range [0, {self.n_states})")
        return int(s)

    def interior_states(self) -> list[int]:
        """States with all four neighbours inside the grid."""
        return [
            self.to_index(r, c)
            for r in range(1, self.rows - 1)
            for c in range(1, self.cols - 1)
        ]


class Transition(NamedTuple):
    s: int
    a: Action
    s_next: int


@dataclass
class DatasetSplit:
    """Train/holdout partition of all (s, a) pairs."""
    train: list[Transition]
    holdout: list[Transition]
    ratio: float
    seed: int

    @property
    def all_transitions(self) -> list[Transition]:
        return sorted(self.train + self.holdout, key=lambda t: (t.s, int(t.a)))

    @property
    def n_states(self) -> int:
        transitions = self.train + self.holdout
        return 1 + max(max(t.s, t.s_next) for t in transitions)


@dataclass
class Trajectory:
    start: int
    actions: list[Action]
    states: list[int] = field(default_factory=list)  # includes the start state


def check_action(a: Union[int, Action]) -> Action:
    try:
        return Action(int(a))
    except (ValueError, TypeError):
        raise GridError(f"Invalid action {a!r}; expected one of {[int(x) for x in Action]}")


def step(g: GridSpec, s: int, a: Union[int, Action]) -> int:
    """One deterministic move with boundary clamping."""
    row, col = g.to_coords(s)
    dr, dc = ACTION_DELTAS[check_action(a)]
    nr, nc = row + dr, col + dc
    if not g.contains(nr, nc):
        return int(s)
    return g.to_index(nr, nc)


def enumerate_transitions(g: GridSpec) -> list[Transition]:
    """All rows*cols*4 transitions in lexicographic (s, a) order."""
    return [
        Transition(s, a, step(g, s, a))
        for s in range(g.n_states)
        for a in Action
    ]


def zero_shot_split(ts: Sequence[Transition], ratio: float, seed: int = 0) -> DatasetSplit:
    """Hold out round(ratio * |ts|) uniformly chosen (s, a) pairs."""
    if not 0.0 <= ratio < 1.0:
        raise GridError(f"Zero-shot ratio must be in [0, 1), got {ratio}")
    ts = list(ts)
    n_holdout = int(np.floor(ratio * len(ts) + 0.5))
    rng = np.random.default_rng(seed)
    held = set(rng.permutation(len(ts))[:n_holdout].tolist())
    train = [t for i, t in enumerate(ts) if i not in held]
    holdout = [t for i, t in enumerate(ts) if i in held]
    return DatasetSplit(train=train, holdout=holdout, ratio=ratio, seed=seed)


def inverse_action(a: Union[int, Action]) -> Action:
    return _INVERSES[check_action(a)]


def inverse_pairs() -> list[tuple[Action, Action]]:
    """The two (a, a^-1) pairs of the grid's action group."""
    return [(Action.UP, Action.DOWN), (Action.LEFT, Action.RIGHT)]


def rollout_states(g: GridSpec, start: int, actions: Sequence[Union[int, Action]]) -> list[int]:
    states = [g.check_state(start)]
    for a in actions:
        states.append(step(g, states[-1], a))
    return states


def sample_trajectory(g: GridSpec, length: int, seed: Union[int, Sequence[int]] = 0) -> Trajectory:
    """Uniform start state, i.i.d. uniform actions, ground-truth states under step()."""
    if length < 1:
        raise GridError(f"Trajectory length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    start = int(rng.integers(g.n_states))
    actions = [Action(int(a)) for a in rng.integers(N_ACTIONS, size=length)]
    return Trajectory(start=start, actions=actions, states=rollout_states(g, start, actions))


def sample_trials(g: GridSpec, length: int, n_trials: int, seed: int = 0) -> list[Trajectory]:
    """Trial i uses the stream seeded by (seed, i), so any subset can be regenerated alone."""
    return [sample_trajectory(g, length, seed=[seed, i]) for i in range(n_trials)]


# ============================================================================
# Dataset export
# ============================================================================

def write_dataset_csv(split: DatasetSplit, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [(t, "train") for t in split.train] + [(t, "holdout") for t in split.holdout]
    rows.sort(key=lambda r: (r[0].s, int(r[0].a)))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(DATASET_CSV_HEADER)
        for t, part in rows:
            writer.writerow([t.s, int(t.a), t.s_next, part])
    return path


def read_dataset_csv(path: Path, ratio: float = 0.0, seed: int = 0) -> DatasetSplit:
    train: list[Transition] = []
    holdout: list[Transition] = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != DATASET_CSV_HEADER:
            raise GridError(f"Unexpected dataset header {reader.fieldnames}, expected {DATASET_CSV_HEADER}")
        for row in reader:
            t = Transition(int(row["s"]), Action(int(row["a"])), int(row["s_next"]))
            (holdout if row["split"] == "holdout" else train).append(t)
    return DatasetSplit(train=train, holdout=holdout, ratio=ratio, seed=seed)
