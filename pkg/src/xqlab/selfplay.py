"""Game runners: MCTS and random agents, single games, and match loops."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import board
from .board import BLACK, RED, Position
from .encoding import encode_state, legal_move_indices
from .replay import Trajectory, TurnRecord
from .search import SearchConfig, SearchOutput, search, select_move


class MctsAgent:
    """Tree-search player around a shared read-only evaluator."""

    def __init__(self, evaluator, cfg: SearchConfig, name: str = "mcts"):
        self.evaluator = evaluator
        self.cfg = cfg
        self.name = name

    def choose(self, p: Position, rng: Optional[np.random.Generator],
               greedy: bool = False) -> tuple[board.Move, Optional[TurnRecord]]:
        out = search(p, self.evaluator, self.cfg, rng=rng)
        move = select_move(out, rng=rng, greedy=greedy)
        record = TurnRecord(
            state=encode_state(p),
            action_indices=legal_move_indices(p, out.moves),
            pi=out.pi.astype(np.float32),
            side=p.side_to_move,
            predicted_value=out.root_value,
            predicted_priors=np.asarray(out.root_priors, dtype=np.float32),
        )
        return move, record

    def greedy_copy(self) -> "MctsAgent":
        """Noise-free, argmax-move variant for evaluation games."""
        cfg = replace(self.cfg, root_noise_fraction=0.0,
                      temperature_cutoff_ply=0, final_temperature=0.0)
        return MctsAgent(self.evaluator, cfg, name=self.name)


class RandomAgent:
    """Uniform random legal mover; evaluation baseline."""

    name = "random"

    def choose(self, p: Position, rng: np.random.Generator,
               greedy: bool = False) -> tuple[board.Move, None]:
        moves = board.legal_moves(p)
        return moves[int(rng.integers(len(moves)))], None


@dataclass
class GameOutcome:
    score_red: int
    plies: int
    trajectory: Optional[Trajectory]


def play_game(red_agent, black_agent, rng: np.random.Generator,
              max_plies: int = 400, record: bool = False,
              start: Optional[Position] = None) -> GameOutcome:
    """Play one game to termination; optionally collect every turn's record."""
    p = start if start is not None else board.initial_position()
    traj = Trajectory() if record else None
    while True:
        moves = board.legal_moves(p)
        result = board.terminal_result(p, moves, max_plies=max_plies)
        if result is not None:
            if traj is not None:
                traj.score_red = result.score_red
                traj.plies = p.ply
            return GameOutcome(score_red=result.score_red, plies=p.ply,
                               trajectory=traj)
        agent = red_agent if p.side_to_move == RED else black_agent
        move, turn = agent.choose(p, rng)
        if traj is not None and turn is not None:
            traj.turns.append(turn)
        p = board._apply_unchecked(p, move)


@dataclass
class MatchResult:
    wins: int
    draws: int
    losses: int

    @property
    def games(self) -> int:
        return self.wins + self.draws + self.losses

    @property
    def win_rate(self) -> float:
        return self.wins / self.games if self.games else 0.0

    @property
    def score(self) -> float:
        return (self.wins - self.losses) / self.games if self.games else 0.0


def play_match(agent, opponent, games: int, rng: np.random.Generator,
               max_plies: int = 400) -> MatchResult:
    """Alternating-color match; even game index puts `agent` on red."""
    wins = draws = losses = 0
    for g in range(games):
        if g % 2 == 0:
            outcome = play_game(agent, opponent, rng, max_plies=max_plies)
            score = outcome.score_red
        else:
            outcome = play_game(opponent, agent, rng, max_plies=max_plies)
            score = -outcome.score_red
        if score > 0:
            wins += 1
        elif score < 0:
            losses += 1
        else:
            draws += 1
    return MatchResult(wins=wins, draws=draws, losses=losses)
