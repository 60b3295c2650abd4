"""Trajectories from self-play and the FIFO replay buffer feeding training."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from threading import Lock
from typing import Optional

import numpy as np


@dataclass
class TurnRecord:
    """One turn: encoded state, the search policy over legal actions (sparse),
    the mover's side, and the evaluator's predictions at play time."""

    state: np.ndarray           # (14, 10, 9) float32
    action_indices: np.ndarray  # legal move indices into the move table
    pi: np.ndarray              # search policy aligned with action_indices
    side: int
    predicted_value: float
    predicted_priors: np.ndarray


@dataclass
class Trajectory:
    """A finished game: per-turn records plus the red score."""

    turns: list[TurnRecord] = field(default_factory=list)
    score_red: int = 0
    plies: int = 0

    def z_for(self, turn: TurnRecord) -> float:
        from .board import RED
        return float(self.score_red if turn.side == RED else -self.score_red)


@dataclass
class Sample:
    state: np.ndarray
    action_indices: np.ndarray
    pi: np.ndarray
    z: float


class ReplayBuffer:
    """FIFO position store with uniform, seed-reproducible sampling.

    Single-writer multi-reader: pushes and samples take the internal lock;
    stored samples are never mutated after insertion.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[Sample] = deque(maxlen=capacity)
        self._lock = Lock()
        self.total_pushed = 0

    def __len__(self) -> int:
        return len(self._items)

    def push_trajectory(self, traj: Trajectory) -> None:
        with self._lock:
            for turn in traj.turns:
                self._items.append(Sample(state=turn.state,
                                          action_indices=turn.action_indices,
                                          pi=turn.pi, z=traj.z_for(turn)))
                self.total_pushed += 1

    def sample(self, batch_size: int, rng: np.random.Generator,
               action_size: Optional[int] = None
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Uniform sample with replacement, π scattered into dense vectors."""
        with self._lock:
            if not self._items:
                raise ValueError("cannot sample from an empty replay buffer")
            idx = rng.integers(0, len(self._items), size=batch_size)
            picks = [self._items[int(i)] for i in idx]
        if action_size is None:
            from .encoding import move_table
            action_size = move_table().size
        states = np.stack([s.state for s in picks])
        pis = np.zeros((batch_size, action_size), dtype=np.float32)
        for row, s in enumerate(picks):
            pis[row, s.action_indices] = s.pi
        zs = np.array([s.z for s in picks], dtype=np.float32)
        return states, pis, zs
