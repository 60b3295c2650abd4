"""State tensor encoding and the fixed action-index table.

The state tensor is a 14 x 10 x 9 binary array (planes x ranks x files).
Planes 0-6 hold the side to move's pieces in K,A,B,N,R,C,P order, planes
7-13 the opponent's. The board is always oriented so the side to move
plays "up": for black the board is rotated 180 degrees, which maps square
``sq`` to ``89 - sq``.

The move table enumerates every (from, to) pair that is geometrically
possible for the side to move on an empty board, in that oriented frame.
Its order is deterministic, and a checksum of the enumeration is embedded
in checkpoints so stale policy heads are refused at load time.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

from . import board
from .board import (BLACK, FILES, RANKS, RED, SQUARES, Move, Position,
                    piece_color, piece_kind, square)

NUM_PLANES = 14
STATE_SHAPE = (NUM_PLANES, RANKS, FILES)


class MoveTable:
    """Bidirectional map between moves (in the mover-oriented frame) and indices."""

    def __init__(self) -> None:
        pairs: dict[tuple[int, int], int] = {}

        def add(frm: int, to: int) -> None:
            if frm != to and (frm, to) not in pairs:
                pairs[(frm, to)] = len(pairs)

        # Straight-line pairs cover Rook, Cannon, King and Pawn steps.
        for frm in range(SQUARES):
            for ray in board.RAYS[frm]:
                for to in ray:
                    add(frm, to)
        for frm in range(SQUARES):
            for to, _leg in board.KNIGHT_MOVES[frm]:
                add(frm, to)
        # Advisor diagonals inside the mover's palace.
        for frm in range(SQUARES):
            for to in board.ADVISOR_STEPS[RED][frm]:
                add(frm, to)
        # Bishop hops on the mover's half.
        for frm in range(SQUARES):
            for to, _eye in board.BISHOP_MOVES[RED][frm]:
                add(frm, to)

        self._index = pairs
        self._pairs = [None] * len(pairs)
        for pair, idx in pairs.items():
            self._pairs[idx] = pair

    def __len__(self) -> int:
        return len(self._pairs)

    @property
    def size(self) -> int:
        return len(self._pairs)

    def checksum(self) -> str:
        blob = ";".join(f"{f},{t}" for f, t in self._pairs).encode()
        return hashlib.sha256(blob).hexdigest()

    def index(self, move: Move, side: int) -> int:
        frm, to = move.from_sq, move.to_sq
        if side == BLACK:
            frm, to = 89 - frm, 89 - to
        try:
            return self._index[(frm, to)]
        except KeyError:
            raise KeyError(f"move {move.text} has no action index") from None

    def move_squares(self, idx: int, side: int) -> tuple[int, int]:
        frm, to = self._pairs[idx]
        if side == BLACK:
            frm, to = 89 - frm, 89 - to
        return frm, to


@lru_cache(maxsize=1)
def move_table() -> MoveTable:
    return MoveTable()


def encode_state(p: Position) -> np.ndarray:
    """Binary piece planes oriented for the side to move."""
    planes = np.zeros(STATE_SHAPE, dtype=np.float32)
    rotate = p.side_to_move == BLACK
    own = p.side_to_move
    for sq, code in enumerate(p.board):
        if not code:
            continue
        s = 89 - sq if rotate else sq
        plane = piece_kind(code) - 1
        if piece_color(code) != own:
            plane += 7
        planes[plane, s // 9, s % 9] = 1.0
    return planes


def legal_move_indices(p: Position, moves: list[Move]) -> np.ndarray:
    """Action indices for a legal move list, aligned element-wise."""
    table = move_table()
    side = p.side_to_move
    return np.fromiter((table.index(m, side) for m in moves), dtype=np.int64,
                       count=len(moves))


def policy_vector(indices: np.ndarray, probs: np.ndarray, size: int | None = None) -> np.ndarray:
    """Scatter per-move probabilities into a dense action-space vector."""
    vec = np.zeros(size if size is not None else move_table().size, dtype=np.float32)
    vec[indices] = probs
    return vec
