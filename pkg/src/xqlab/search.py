"""PUCT tree search over Xiangqi positions with a pluggable leaf evaluator.

One tree belongs to one caller; positions are immutable so the evaluator
can be shared read-only across concurrent searches. No virtual loss or
in-tree parallelism: simulations run strictly sequentially.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .board import Move, Position, _apply_unchecked, legal_moves, terminal_result


class SearchError(RuntimeError):
    pass


@dataclass
class SearchConfig:
    simulations: int = 160
    c_puct: float = 1.5
    root_dirichlet_alpha: float = 0.2
    root_noise_fraction: float = 0.0     # enabled (0.25) during self-play only
    temperature: float = 1.0
    temperature_cutoff_ply: int = 20     # tau = temperature before, final after
    final_temperature: float = 0.0
    max_game_plies: int = 400
    top_k: int = 3

    def tau_for_ply(self, ply: int) -> float:
        return self.temperature if ply < self.temperature_cutoff_ply \
            else self.final_temperature

    def __post_init__(self):
        if self.simulations < 1:
            raise ValueError("simulations must be >= 1")
        if self.c_puct <= 0:
            raise ValueError("c_puct must be positive")
        if self.temperature < 0 or self.final_temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass
class Candidate:
    move: Move
    visits: int          # N(s, a)
    n_parent: int        # N(s), the root visit count shown alongside
    q: float
    prior: float


@dataclass
class SearchOutput:
    moves: list[Move]
    pi: np.ndarray
    value_estimate: float        # mean backed-up value at the root
    visit_counts: np.ndarray
    top_k: list[Candidate]
    simulations: int
    root_visits: int
    root_value: float = 0.0      # evaluator's raw value prediction at the root
    root_priors: np.ndarray | None = None  # evaluator's priors before noise


class _Node:
    __slots__ = ("position", "moves", "priors", "edge_n", "edge_w", "children",
                 "terminal_value", "expanded")

    def __init__(self, position: Position):
        self.position = position
        self.moves: list[Move] = []
        self.priors: Optional[np.ndarray] = None
        self.edge_n: Optional[np.ndarray] = None
        self.edge_w: Optional[np.ndarray] = None
        self.children: dict[int, _Node] = {}
        self.terminal_value: Optional[float] = None  # mover's perspective
        self.expanded = False

    @property
    def visits(self) -> int:
        # Expansion counts as the first visit.
        return 1 + int(self.edge_n.sum()) if self.expanded else 0


def _expand(node: _Node, evaluator, cfg: SearchConfig) -> float:
    moves = legal_moves(node.position)
    result = terminal_result(node.position, moves, max_plies=cfg.max_game_plies)
    if result is not None:
        node.terminal_value = float(result.score_for(node.position.side_to_move))
        return node.terminal_value
    priors, value = evaluator.evaluate(node.position, moves)
    node.moves = moves
    node.priors = np.asarray(priors, dtype=np.float64)
    node.edge_n = np.zeros(len(moves), dtype=np.int64)
    node.edge_w = np.zeros(len(moves), dtype=np.float64)
    node.expanded = True
    return float(value)


def _select_edge(node: _Node, c_puct: float) -> int:
    n = node.edge_n
    w = node.edge_w
    q = np.divide(w, n, out=np.zeros_like(w), where=n > 0)
    u = c_puct * node.priors * np.sqrt(node.visits) / (1.0 + n)
    return int(np.argmax(q + u))


def search(p: Position, evaluator, cfg: SearchConfig,
           rng: Optional[np.random.Generator] = None) -> SearchOutput:
    """Run cfg.simulations PUCT simulations from p and return the visit policy.

    Selection maximizes Q + c_puct * P * sqrt(N(s)) / (1 + N(s,a)) with
    unvisited Q = 0 and lowest-index tie-breaking; leaf values back up with
    a sign flip per ply; terminal leaves back up their exact game score.
    """
    root = _Node(p)
    value0 = _expand(root, evaluator, cfg)
    if root.terminal_value is not None:
        raise SearchError("search called on a terminal position")
    raw_priors = root.priors.copy()
    if cfg.root_noise_fraction > 0.0:
        if rng is None:
            raise SearchError("root noise requires an rng")
        noise = rng.dirichlet(np.full(len(root.moves), cfg.root_dirichlet_alpha))
        root.priors = (1.0 - cfg.root_noise_fraction) * root.priors \
            + cfg.root_noise_fraction * noise

    for _ in range(cfg.simulations):
        node = root
        path: list[tuple[_Node, int]] = []
        while True:
            if node.terminal_value is not None:
                value = node.terminal_value
                break
            if not node.expanded:
                value = _expand(node, evaluator, cfg)
                if node.terminal_value is not None:
                    value = node.terminal_value
                break
            edge = _select_edge(node, cfg.c_puct)
            path.append((node, edge))
            child = node.children.get(edge)
            if child is None:
                child = _Node(_apply_unchecked(node.position, node.moves[edge]))
                node.children[edge] = child
            node = child
        for parent, edge in reversed(path):
            value = -value
            parent.edge_n[edge] += 1
            parent.edge_w[edge] += value

    visit_counts = root.edge_n.copy()
    tau = cfg.tau_for_ply(p.ply)
    pi = _visit_policy(visit_counts, tau)

    total = visit_counts.sum()
    if total > 0:
        value_estimate = float(root.edge_w.sum() / total)
    else:
        value_estimate = float(value0)

    order = sorted(range(len(root.moves)), key=lambda i: (-visit_counts[i], i))
    top = [Candidate(move=root.moves[i], visits=int(visit_counts[i]),
                     n_parent=root.visits, q=_edge_q(root, i),
                     prior=float(root.priors[i]))
           for i in order[:cfg.top_k]]
    return SearchOutput(moves=root.moves, pi=pi, value_estimate=value_estimate,
                        visit_counts=visit_counts, top_k=top,
                        simulations=cfg.simulations, root_visits=root.visits,
                        root_value=float(value0), root_priors=raw_priors)


def _edge_q(node: _Node, i: int) -> float:
    n = node.edge_n[i]
    return float(node.edge_w[i] / n) if n > 0 else 0.0


def _visit_policy(visits: np.ndarray, tau: float) -> np.ndarray:
    pi = np.zeros(len(visits), dtype=np.float64)
    if tau == 0.0:
        pi[int(np.argmax(visits))] = 1.0
        return pi
    scaled = np.power(visits.astype(np.float64), 1.0 / tau)
    total = scaled.sum()
    if total <= 0:
        pi[:] = 1.0 / len(visits)
        return pi
    return scaled / total


def select_move(out: SearchOutput, rng: Optional[np.random.Generator] = None,
                greedy: bool = False) -> Move:
    """Sample a move from pi (training) or take argmax pi (evaluation)."""
    if greedy or rng is None:
        return out.moves[int(np.argmax(out.pi))]
    return out.moves[int(rng.choice(len(out.pi), p=out.pi))]


@dataclass
class SearchCost:
    worst_case: float
    per_move: float
    formula: str = field(default="O(b^d * n * C)", repr=False)
    note: str = field(default="worst-case approximation; practical cost is n * C",
                      repr=False)


def complexity_estimate(branching: float, depth: float, simulations: float,
                        eval_cost: float) -> SearchCost:
    """Symbolic worst-case bound plus the practical per-move budget n * C."""
    if branching <= 0 or depth <= 0 or simulations <= 0 or eval_cost < 0:
        raise ValueError("branching, depth and simulations must be positive")
    return SearchCost(worst_case=branching ** depth * simulations * eval_cost,
                      per_move=simulations * eval_cost)
