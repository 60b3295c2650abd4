"""Shared test utilities: random-but-valid positions and mate templates."""

from __future__ import annotations

import random

from xqlab import board
from xqlab.board import (ADVISOR, BISHOP, BLACK, CANNON, KING, KNIGHT, PAWN,
                         RED, ROOK, piece)

ADVISOR_POINTS = {
    RED: [(3, 0), (5, 0), (4, 1), (3, 2), (5, 2)],
    BLACK: [(3, 9), (5, 9), (4, 8), (3, 7), (5, 7)],
}
BISHOP_POINTS = {
    RED: [(2, 0), (6, 0), (0, 2), (4, 2), (8, 2), (2, 4), (6, 4)],
    BLACK: [(2, 9), (6, 9), (0, 7), (4, 7), (8, 7), (2, 5), (6, 5)],
}
PALACE = {
    RED: [(f, r) for f in (3, 4, 5) for r in (0, 1, 2)],
    BLACK: [(f, r) for f in (3, 4, 5) for r in (7, 8, 9)],
}


def random_position(rng: random.Random, max_extra_pieces: int = 10):
    """A sparse random Position satisfying all placement invariants, where
    the side to move cannot immediately capture the enemy King."""
    while True:
        cells = {}

        def place(color, kind, spots):
            free = [s for s in spots if s not in cells]
            if free:
                cells[rng.choice(free)] = piece(color, kind)

        place(RED, KING, PALACE[RED])
        place(BLACK, KING, PALACE[BLACK])
        anywhere = [(f, r) for f in range(9) for r in range(10)]
        for _ in range(rng.randint(0, max_extra_pieces)):
            color = rng.choice((RED, BLACK))
            kind = rng.choice((ADVISOR, BISHOP, KNIGHT, ROOK, CANNON, PAWN))
            if kind == ADVISOR:
                spots = ADVISOR_POINTS[color]
            elif kind == BISHOP:
                spots = BISHOP_POINTS[color]
            elif kind == PAWN:
                # Keep pawns off their own first three ranks (unreachable).
                spots = [(f, r) for f in range(9)
                         for r in (range(3, 10) if color == RED else range(0, 7))]
            else:
                spots = anywhere
            counts = sum(1 for c in cells.values() if c == piece(color, kind))
            if counts >= board.MAX_COUNTS[kind]:
                continue
            place(color, kind, spots)

        grid = [board.EMPTY] * 90
        for (f, r), code in cells.items():
            grid[r * 9 + f] = code
        fen = _fen_from_grid(grid, rng.choice(("w", "b")))
        try:
            p = board.parse_fen(fen)
        except board.FenError:
            continue
        # Unreachable state: the opponent just moved, so their King cannot
        # stand attacked (even by a pinned piece).
        enemy_king = p.king_sq[1 - p.side_to_move]
        if board._is_attacked(p.board, enemy_king, p.side_to_move):
            continue
        return p


def _fen_from_grid(grid, side):
    rows = []
    for rank in range(9, -1, -1):
        row, run = [], 0
        for f in range(9):
            code = grid[rank * 9 + f]
            if not code:
                run += 1
                continue
            if run:
                row.append(str(run))
                run = 0
            letter = board.KIND_LETTERS[board.piece_kind(code)]
            row.append(letter if board.piece_color(code) == RED else letter.lower())
        if run:
            row.append(str(run))
        rows.append("".join(row))
    return "/".join(rows) + (" b" if side == "b" else "")


def mirror_fen(fen: str) -> str:
    """Mirror a position across the central file (a<->i)."""
    parts = fen.split()
    rows = parts[0].split("/")
    mirrored = []
    for row in rows:
        cells = []
        for ch in row:
            if ch.isdigit():
                cells.extend(["."] * int(ch))
            else:
                cells.append(ch)
        cells.reverse()
        out, run = [], 0
        for c in cells:
            if c == ".":
                run += 1
                continue
            if run:
                out.append(str(run))
                run = 0
            out.append(c)
        if run:
            out.append(str(run))
        mirrored.append("".join(out))
    rest = (" " + " ".join(parts[1:])) if len(parts) > 1 else ""
    return "/".join(mirrored) + rest


# Mate-in-one templates with roughly balanced material: the black pieces are
# quarantined where they can neither capture the checker, block the rank-9
# check, nor free the King. Each entry is (fen, the unique mating move).
_MATE_TEMPLATES = [
    # Double-rook ladder, black rooks far away.
    ("4k4/1R7/9/9/5r3/6r2/9/9/9/R2K5", "a0a9"),
    ("4k4/1R7/9/5r3/9/6r2/9/9/9/R2K5", "a0a9"),
    ("4k4/1R7/9/9/5r1r1/9/9/9/9/R2K5", "a0a9"),
    ("4k4/1R7/9/9/5n1r1/9/9/9/9/R2K5", "a0a9"),
    ("4k4/1R7/9/9/5c1r1/9/9/9/9/R2K5", "a0a9"),
    ("4k4/1R7/9/9/6rn1/8c/9/9/9/R2K5", "a0a9"),
    # Ladder with the spare rook on other ranks.
    ("4k4/1R7/9/9/5r3/6r2/9/9/R8/3K5", "a1a9"),
    ("4k4/1R7/9/9/5r3/6r2/9/R8/9/3K5", "a2a9"),
    ("4k4/1R7/9/5r3/9/9/6r2/9/R8/3K5", "a1a9"),
    ("4k4/1R7/5r3/9/9/6r2/9/9/R8/3K5", "a1a9"),
    ("3k5/1R7/9/9/5r3/6r2/9/9/R8/4K4", "a1a9"),
    ("3k5/1R7/9/9/5r1r1/9/9/9/R8/4K4", "a1a9"),
]


def mate_in_one_suite():
    """At least 20 distinct positions, each with a unique mate in one."""
    suite = []
    for fen, move in _MATE_TEMPLATES:
        suite.append((fen, move))
        mf = mirror_fen(fen)
        files = "abcdefghi"
        mm = (files[8 - files.index(move[0])] + move[1]
              + files[8 - files.index(move[2])] + move[3])
        suite.append((mf, mm))
    return suite
