"""Population upkeep: round-robin evaluation, payoff filling, Nash-guided
opponent selection, and rotation of the weakest member.

The same machinery drives both the Xiangqi training harness (agents are
checkpoint labels, the engine plays real games) and pure matrix games
(agents are strategy rows), which is how the population-vs-latest contrast
is exercised in the tests.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .meta import exploitability_symmetric
from .nash import NashResult, PayoffMatrix, solve_max_entropy_nash

log = logging.getLogger(__name__)


@dataclass
class Population:
    """Ordered agent labels with optional checkpoint paths, capped at `capacity`."""

    capacity: int
    labels: list[str] = field(default_factory=list)
    checkpoints: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("population labels must be unique")
        if len(self.labels) > self.capacity:
            raise ValueError("population exceeds capacity")

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def warmed_up(self) -> bool:
        return self.size >= self.capacity


@dataclass(frozen=True)
class MatchTuple:
    """One game: red score (+1/0/-1) and the two player labels."""

    score_red: int
    red: str
    black: str


@dataclass
class NashBuffer:
    """Accumulated challenger-vs-population results."""

    tuples: list[MatchTuple] = field(default_factory=list)
    incomplete_pairings: list[str] = field(default_factory=list)

    def append(self, score_red: int, red: str, black: str) -> None:
        if score_red not in (-1, 0, 1):
            raise ValueError(f"score_red must be -1/0/1, got {score_red}")
        self.tuples.append(MatchTuple(score_red, red, black))

    def __len__(self) -> int:
        return len(self.tuples)


@dataclass
class OpponentChoice:
    label: str
    distribution: dict[str, float]
    top_n: int


Engine = Callable[[str, str], int]


def evaluate_challenger(challenger: str, population: Population, k_games: int,
                        engine: Engine, buffer: Optional[NashBuffer] = None
                        ) -> NashBuffer:
    """Play `k_games` against every member, challenger red on even games."""
    if k_games < 2:
        raise ValueError("k_games must be >= 2 so both colors are played")
    buf = buffer if buffer is not None else NashBuffer()
    for member in population.labels:
        for g in range(k_games):
            if g % 2 == 0:
                red, black = challenger, member
            else:
                red, black = member, challenger
            try:
                score_red = engine(red, black)
            except Exception:
                log.exception("engine failed on %s vs %s; pairing incomplete",
                              red, black)
                buf.incomplete_pairings.append(member)
                break
            buf.append(score_red, red, black)
    return buf


def fill_payoff(buffer: NashBuffer, labels: Sequence[str],
                normalize: bool = True) -> PayoffMatrix:
    """Accumulate buffer tuples into an exactly antisymmetric payoff matrix.

    Integer accumulation first; when `normalize` each entry is divided by
    the number of games between that pair so values live in [-1, 1].
    """
    index = {lbl: i for i, lbl in enumerate(labels)}
    k = len(labels)
    raw = np.zeros((k, k), dtype=np.int64)
    games = np.zeros((k, k), dtype=np.int64)
    for t in buffer.tuples:
        try:
            a, b = index[t.red], index[t.black]
        except KeyError as exc:
            raise KeyError(f"buffer label {exc.args[0]!r} not in {list(labels)}") from None
        raw[a, b] += t.score_red
        raw[b, a] -= t.score_red
        games[a, b] += 1
        games[b, a] += 1
    matrix = raw.astype(float)
    if normalize:
        np.divide(matrix, games, out=matrix, where=games > 0)
    return PayoffMatrix.from_values(list(labels), matrix)


def select_opponent_and_rotate(payoff: PayoffMatrix, population: Population,
                               challenger: str, top_n: int,
                               rng: np.random.Generator,
                               nash: Optional[NashResult] = None
                               ) -> tuple[OpponentChoice, Population]:
    """Sample the next opponent from the Nash top-n and swap the challenger in.

    The removed member is the population agent with the lowest Nash mass
    (oldest first on ties); the challenger itself is never removed in the
    rotation that inserts it. On solver failure the choice falls back to a
    uniform distribution, logged, and the oldest member is removed.
    """
    if nash is None:
        nash = solve_max_entropy_nash(payoff)
    labels = payoff.labels
    if not nash.converged:
        log.warning("nash solve failed; falling back to uniform opponent sampling")
        probs = {lbl: 1.0 / len(labels) for lbl in labels}
    else:
        probs = {lbl: float(p) for lbl, p in zip(labels, nash.p)}

    ranked = sorted(range(len(labels)), key=lambda i: (-probs[labels[i]], i))
    chosen_idx = ranked[:max(1, top_n)]
    weights = np.array([max(probs[labels[i]], 0.0) for i in chosen_idx])
    if weights.sum() <= 0:
        weights = np.ones(len(chosen_idx))
    weights = weights / weights.sum()
    pick = chosen_idx[int(rng.choice(len(chosen_idx), p=weights))]
    choice = OpponentChoice(
        label=labels[pick],
        distribution={labels[i]: float(w) for i, w in zip(chosen_idx, weights)},
        top_n=top_n,
    )

    members = list(population.labels)
    if population.warmed_up:
        removable = [(probs.get(lbl, 0.0), idx) for idx, lbl in enumerate(members)]
        _, drop_idx = min(removable, key=lambda t: (t[0], t[1]))
        del members[drop_idx]
    members.append(challenger)
    new_pop = Population(capacity=population.capacity, labels=members,
                         checkpoints=dict(population.checkpoints))
    return choice, new_pop


# ---------------------------------------------------------------------------
# Matrix-game harness: population-based vs latest-opponent training on a
# fixed payoff matrix, with pure best-response "training".


@dataclass
class MatrixLoopResult:
    population: list[int]                 # strategy rows in the final population
    nash_probs: np.ndarray                # Nash over the final population
    mixture: np.ndarray                   # full-length mixture over all rows
    exploitability: float
    history: list[float]                  # exploitability of the mixture per step


def run_matrix_population_loop(payoff: np.ndarray, iterations: int,
                               capacity: int, top_n: int,
                               rng: np.random.Generator,
                               k_games: int = 2) -> MatrixLoopResult:
    """Populationer dynamics on a matrix game; training = best-response row."""
    G = np.asarray(payoff, dtype=float)
    n = G.shape[0]
    population = Population(capacity=capacity, labels=[_row_label(0)])
    history = []
    mixture = np.zeros(n)
    mixture[0] = 1.0
    for _ in range(iterations):
        rows = [_row_index(lbl) for lbl in population.labels]
        sub = G[np.ix_(rows, rows)]
        res = solve_max_entropy_nash(sub)
        mixture = np.zeros(n)
        for r, p in zip(rows, res.p):
            mixture[r] += p
        history.append(exploitability_symmetric(G, mixture))
        # Best response to the population Nash mixture (ties: lowest row).
        challenger = int(np.argmax(G @ mixture))
        challenger_label = _row_label(challenger)
        if challenger_label in population.labels:
            # Re-evaluating an existing member cannot change the population.
            continue
        engine = _matrix_engine(G)
        buffer = evaluate_challenger(challenger_label, population, k_games, engine)
        labels = list(population.labels) + [challenger_label]
        payoff_matrix = fill_payoff(buffer, labels)
        _, population = select_opponent_and_rotate(
            payoff_matrix, population, challenger_label, top_n, rng)
    rows = [_row_index(lbl) for lbl in population.labels]
    sub = G[np.ix_(rows, rows)]
    res = solve_max_entropy_nash(sub)
    mixture = np.zeros(n)
    for r, p in zip(rows, res.p):
        mixture[r] += p
    expl = exploitability_symmetric(G, mixture)
    history.append(expl)
    return MatrixLoopResult(population=rows, nash_probs=res.p, mixture=mixture,
                            exploitability=expl, history=history)


def run_matrix_latest_loop(payoff: np.ndarray, iterations: int) -> MatrixLoopResult:
    """Latest-opponent self-play baseline: always best-respond to the last agent."""
    G = np.asarray(payoff, dtype=float)
    n = G.shape[0]
    current = 0
    history = []
    for _ in range(iterations):
        mixture = np.zeros(n)
        mixture[current] = 1.0
        history.append(exploitability_symmetric(G, mixture))
        current = int(np.argmax(G[:, current]))
    mixture = np.zeros(n)
    mixture[current] = 1.0
    expl = exploitability_symmetric(G, mixture)
    history.append(expl)
    return MatrixLoopResult(population=[current], nash_probs=np.array([1.0]),
                            mixture=mixture, exploitability=expl, history=history)


def _row_label(row: int) -> str:
    return f"row-{row}"


def _row_index(label: str) -> int:
    return int(label.rsplit("-", 1)[1])


def _matrix_engine(G: np.ndarray) -> Engine:
    def engine(red: str, black: str) -> int:
        value = G[_row_index(red), _row_index(black)]
        return int(np.sign(value))

    return engine
