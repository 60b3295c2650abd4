"""Leaf evaluators for the tree search.

An evaluator maps (position, legal moves) to (priors over those moves,
value in [-1, 1] from the side to move's perspective). All evaluators are
read-only after construction and safe to share across workers.
"""

from __future__ import annotations

import math

import numpy as np

from . import board
from .board import Position, Move, piece_color, piece_kind
from .encoding import encode_state, legal_move_indices, move_table
from .nnet import NumpyNet

MATERIAL_WEIGHTS = {board.ROOK: 9.0, board.CANNON: 4.5, board.KNIGHT: 4.0,
                    board.BISHOP: 2.0, board.ADVISOR: 2.0, board.PAWN: 1.0,
                    board.KING: 0.0}


class UniformEvaluator:
    """Uniform priors and zero value; the blank-slate baseline."""

    def evaluate(self, p: Position, moves: list[Move]) -> tuple[np.ndarray, float]:
        n = len(moves)
        return np.full(n, 1.0 / n, dtype=np.float64), 0.0


class MaterialEvaluator:
    """Uniform priors with a material-count value squashed through tanh.

    Serves as the no-training baseline and as a test oracle whose sign is
    correct by construction.
    """

    def __init__(self, scale: float = 12.0):
        self.scale = scale

    def material_balance(self, p: Position) -> float:
        diff = 0.0
        for code in p.board:
            if code:
                w = MATERIAL_WEIGHTS[piece_kind(code)]
                diff += w if piece_color(code) == p.side_to_move else -w
        return diff

    def evaluate(self, p: Position, moves: list[Move]) -> tuple[np.ndarray, float]:
        n = len(moves)
        v = math.tanh(self.material_balance(p) / self.scale)
        return np.full(n, 1.0 / n, dtype=np.float64), v


class NetEvaluator:
    """Numpy-forward network evaluator; masks and renormalizes the policy."""

    def __init__(self, net: NumpyNet):
        self.net = net
        self.table = move_table()

    def evaluate(self, p: Position, moves: list[Move]) -> tuple[np.ndarray, float]:
        planes = encode_state(p)
        logits, v = self.net.forward(planes)
        return masked_priors(logits, legal_move_indices(p, moves)), v


def masked_priors(logits: np.ndarray, legal_indices: np.ndarray) -> np.ndarray:
    """Full softmax, masked to the legal indices and renormalized."""
    z = logits - logits.max()
    probs = np.exp(z)
    probs /= probs.sum()
    legal = probs[legal_indices]
    total = legal.sum()
    if total <= 0:
        return np.full(len(legal_indices), 1.0 / len(legal_indices))
    return legal / total


def evaluate_state(net: NumpyNet, p: Position, moves: list[Move]
                   ) -> tuple[np.ndarray, float]:
    """Masked full-action-space policy and value for a single position.

    Returns the policy as a dense vector over the whole move table with
    zeros at illegal indices summing to one over the legal ones.
    """
    planes = encode_state(p)
    logits, v = net.forward(planes)
    indices = legal_move_indices(p, moves)
    priors = masked_priors(logits, indices)
    dense = np.zeros(logits.shape[0], dtype=np.float64)
    dense[indices] = priors
    return dense, v
