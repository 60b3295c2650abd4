"""Xiangqi rules: board state, move generation, legality, termination.

Board geometry: 9 files (a..i, left to right from red's side) x 10 ranks
(0..9, rank 0 is red's back rank). Squares are flat indices
``sq = rank * 9 + file``. Red moves first and moves "up" (increasing rank).

Positions are immutable values; every operation here is a pure function,
so positions can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

FILES = 9
RANKS = 10
SQUARES = FILES * RANKS

RED = 0
BLACK = 1

# Piece kinds. A piece code is kind | (color << 3); 0 means empty.
KING, ADVISOR, BISHOP, KNIGHT, ROOK, CANNON, PAWN = 1, 2, 3, 4, 5, 6, 7
EMPTY = 0

KIND_LETTERS = {KING: "K", ADVISOR: "A", BISHOP: "B", KNIGHT: "N",
                ROOK: "R", CANNON: "C", PAWN: "P"}
LETTER_KINDS = {v: k for k, v in KIND_LETTERS.items()}

# Per-color maximum piece counts in any legal position.
MAX_COUNTS = {KING: 1, ADVISOR: 2, BISHOP: 2, KNIGHT: 2, ROOK: 2, CANNON: 2, PAWN: 5}

MATERIAL_DRAW_HALFMOVES = 120
DEFAULT_MAX_PLIES = 400


class FenError(ValueError):
    """Raised when a FEN string cannot be parsed into a valid position."""


class IllegalMoveError(ValueError):
    """Raised when a move is not legal in the given position."""


def piece(color: int, kind: int) -> int:
    return kind | (color << 3)


def piece_color(code: int) -> int:
    return code >> 3


def piece_kind(code: int) -> int:
    return code & 7


def square(file: int, rank: int) -> int:
    return rank * 9 + file


def file_of(sq: int) -> int:
    return sq % 9


def rank_of(sq: int) -> int:
    return sq // 9


def square_name(sq: int) -> str:
    return "abcdefghi"[sq % 9] + str(sq // 9)


def parse_square(text: str) -> int:
    if len(text) != 2 or text[0] not in "abcdefghi" or text[1] not in "0123456789":
        raise ValueError(f"bad square {text!r}")
    return int(text[1]) * 9 + "abcdefghi".index(text[0])


def _in_palace(file: int, rank: int, color: int) -> bool:
    if not 3 <= file <= 5:
        return False
    return 0 <= rank <= 2 if color == RED else 7 <= rank <= 9


def _own_side(rank: int, color: int) -> bool:
    return 0 <= rank <= 4 if color == RED else 5 <= rank <= 9


def _crossed_river(rank: int, color: int) -> bool:
    return 5 <= rank <= 9 if color == RED else 0 <= rank <= 4


# ---------------------------------------------------------------------------
# Precomputed geometry tables.


def _build_tables():
    knight_moves = [[] for _ in range(SQUARES)]   # (to, leg) pairs
    knight_rev = [[] for _ in range(SQUARES)]     # (frm, leg): knight on frm attacks sq
    king_steps = ([[] for _ in range(SQUARES)], [[] for _ in range(SQUARES)])
    advisor_steps = ([[] for _ in range(SQUARES)], [[] for _ in range(SQUARES)])
    bishop_moves = ([[] for _ in range(SQUARES)], [[] for _ in range(SQUARES)])
    pawn_steps = ([[] for _ in range(SQUARES)], [[] for _ in range(SQUARES)])

    knight_deltas = [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)]
    for f in range(FILES):
        for r in range(RANKS):
            sq = square(f, r)
            for df, dr in knight_deltas:
                tf, tr = f + df, r + dr
                if not (0 <= tf < FILES and 0 <= tr < RANKS):
                    continue
                # Leg square adjacent to the origin along the long axis.
                leg = square(f + (df // 2 if abs(df) == 2 else 0),
                             r + (dr // 2 if abs(dr) == 2 else 0))
                to = square(tf, tr)
                knight_moves[sq].append((to, leg))
                knight_rev[to].append((sq, leg))

    for color in (RED, BLACK):
        for f in range(3, 6):
            for r in (range(0, 3) if color == RED else range(7, 10)):
                sq = square(f, r)
                for df, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    tf, tr = f + df, r + dr
                    if _in_palace(tf, tr, color):
                        king_steps[color][sq].append(square(tf, tr))
                for df, dr in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    tf, tr = f + df, r + dr
                    if _in_palace(tf, tr, color):
                        advisor_steps[color][sq].append(square(tf, tr))

    for color in (RED, BLACK):
        for f in range(FILES):
            for r in range(RANKS):
                if not _own_side(r, color):
                    continue
                sq = square(f, r)
                for df, dr in ((2, 2), (2, -2), (-2, 2), (-2, -2)):
                    tf, tr = f + df, r + dr
                    if 0 <= tf < FILES and 0 <= tr < RANKS and _own_side(tr, color):
                        eye = square(f + df // 2, r + dr // 2)
                        bishop_moves[color][sq].append((square(tf, tr), eye))
                fwd = r + 1 if color == RED else r - 1
                steps = []
                if 0 <= fwd < RANKS:
                    steps.append(square(f, fwd))
                pawn_steps[color][sq] = steps

    # Pawns past the river also step sideways; at the last rank only sideways.
    for color in (RED, BLACK):
        for f in range(FILES):
            for r in range(RANKS):
                if not _crossed_river(r, color):
                    continue
                sq = square(f, r)
                fwd = r + 1 if color == RED else r - 1
                steps = []
                if 0 <= fwd < RANKS:
                    steps.append(square(f, fwd))
                for tf in (f - 1, f + 1):
                    if 0 <= tf < FILES:
                        steps.append(square(tf, r))
                pawn_steps[color][sq] = steps

    rays = []
    for sq in range(SQUARES):
        f, r = sq % 9, sq // 9
        north = [square(f, rr) for rr in range(r + 1, RANKS)]
        south = [square(f, rr) for rr in range(r - 1, -1, -1)]
        east = [square(ff, r) for ff in range(f + 1, FILES)]
        west = [square(ff, r) for ff in range(f - 1, -1, -1)]
        rays.append((north, south, east, west))

    return knight_moves, knight_rev, king_steps, advisor_steps, bishop_moves, pawn_steps, rays


(KNIGHT_MOVES, KNIGHT_REV, KING_STEPS, ADVISOR_STEPS,
 BISHOP_MOVES, PAWN_STEPS, RAYS) = _build_tables()

# Zobrist keys for repetition detection; seeded so keys are stable across runs.
_zrng = np.random.default_rng(0x5A0B1157)
ZOBRIST = _zrng.integers(1, 2**63 - 1, size=(16, SQUARES), dtype=np.int64)
ZOBRIST_SIDE = int(_zrng.integers(1, 2**63 - 1, dtype=np.int64))


@dataclass(frozen=True)
class Move:
    """A from/to square pair, with the captured kind when the move captures."""

    from_sq: int
    to_sq: int
    captured: Optional[int] = None

    @property
    def text(self) -> str:
        return square_name(self.from_sq) + square_name(self.to_sq)

    def __repr__(self) -> str:
        return f"Move({self.text})"


def parse_move_text(text: str) -> tuple[int, int]:
    """Parse 4-character move text like "b0c2" into (from_sq, to_sq)."""
    if len(text) != 4:
        raise ValueError(f"move text must be 4 characters, got {text!r}")
    return parse_square(text[:2]), parse_square(text[2:])


@dataclass(frozen=True)
class GameResult:
    """Terminal game outcome. score_red is +1/0/-1; black's score is its negation."""

    score_red: int

    @property
    def score_black(self) -> int:
        return -self.score_red

    def score_for(self, color: int) -> int:
        return self.score_red if color == RED else -self.score_red


class Position:
    """Immutable Xiangqi game state."""

    __slots__ = ("board", "side_to_move", "halfmove_clock", "ply",
                 "repetition_key_history", "key", "king_sq")

    def __init__(self, board, side_to_move, halfmove_clock, ply, history, key, king_sq):
        self.board = board                      # tuple of 90 piece codes
        self.side_to_move = side_to_move
        self.halfmove_clock = halfmove_clock    # plies since last capture
        self.ply = ply
        self.repetition_key_history = history   # tuple of keys, current included
        self.key = key
        self.king_sq = king_sq                  # (red king square, black king square)

    def __eq__(self, other):
        if not isinstance(other, Position):
            return NotImplemented
        return (self.board == other.board and self.side_to_move == other.side_to_move
                and self.halfmove_clock == other.halfmove_clock and self.ply == other.ply)

    def __hash__(self):
        return hash((self.board, self.side_to_move))

    def __repr__(self):
        return f"Position({format_fen(self)!r}, ply={self.ply})"


def compute_key(board, side_to_move: int) -> int:
    key = 0
    for sq, code in enumerate(board):
        if code:
            key ^= int(ZOBRIST[code - 1, sq])
    if side_to_move == BLACK:
        key ^= ZOBRIST_SIDE
    return key


def _validate_board(board, side_to_move) -> None:
    counts = {RED: dict.fromkeys(MAX_COUNTS, 0), BLACK: dict.fromkeys(MAX_COUNTS, 0)}
    kings = {RED: None, BLACK: None}
    for sq, code in enumerate(board):
        if not code:
            continue
        color, kind = piece_color(code), piece_kind(code)
        counts[color][kind] += 1
        f, r = sq % 9, sq // 9
        if kind == KING:
            if kings[color] is not None:
                raise FenError(f"two {'red' if color == RED else 'black'} Kings")
            kings[color] = sq
            if not _in_palace(f, r, color):
                raise FenError(f"King outside palace at {square_name(sq)}")
        elif kind == ADVISOR:
            if not _in_palace(f, r, color) or (f + r) % 2 != (1 if color == RED else 0):
                raise FenError(f"Advisor off palace diagonal at {square_name(sq)}")
        elif kind == BISHOP:
            if not _own_side(r, color):
                raise FenError(f"Bishop across the river at {square_name(sq)}")
    for color in (RED, BLACK):
        if kings[color] is None:
            raise FenError(f"missing {'red' if color == RED else 'black'} King")
        for kind, n in counts[color].items():
            if n > MAX_COUNTS[kind]:
                raise FenError(
                    f"too many {KIND_LETTERS[kind]} pieces for "
                    f"{'red' if color == RED else 'black'}: {n}")
    if _kings_facing(board, kings[RED], kings[BLACK]):
        raise FenError("Kings face each other on an open file")


def _kings_facing(board, red_k: int, black_k: int) -> bool:
    if red_k % 9 != black_k % 9:
        return False
    for sq in range(red_k + 9, black_k, 9):
        if board[sq]:
            return False
    return True


def parse_fen(text: str) -> Position:
    """Parse a placement string (optionally followed by " w"/" b") into a Position."""
    parts = text.split()
    if not parts:
        raise FenError("empty FEN")
    placement = parts[0]
    side = RED
    if len(parts) > 1:
        if parts[1] == "b":
            side = BLACK
        elif parts[1] != "w":
            raise FenError(f"unknown side token {parts[1]!r}")
    ranks = placement.split("/")
    if len(ranks) != 10:
        raise FenError(f"expected 10 ranks, got {len(ranks)}")
    board = [EMPTY] * SQUARES
    for i, row in enumerate(ranks):
        rank = 9 - i  # FEN lists black's back rank first
        f = 0
        for ch in row:
            if ch.isdigit():
                f += int(ch)
            elif ch.upper() in LETTER_KINDS:
                if f >= FILES:
                    raise FenError(f"rank {rank} too long: {row!r}")
                color = RED if ch.isupper() else BLACK
                board[square(f, rank)] = piece(color, LETTER_KINDS[ch.upper()])
                f += 1
            else:
                raise FenError(f"unknown piece letter {ch!r} in rank {rank}: {row!r}")
        if f != FILES:
            raise FenError(f"rank {rank} has {f} files, expected 9: {row!r}")
    _validate_board(board, side)
    board = tuple(board)
    kings = (board.index(piece(RED, KING)), board.index(piece(BLACK, KING)))
    key = compute_key(board, side)
    return Position(board, side, 0, 0, (key,), key, kings)


def format_fen(p: Position) -> str:
    rows = []
    for rank in range(9, -1, -1):
        row = []
        run = 0
        for f in range(FILES):
            code = p.board[square(f, rank)]
            if not code:
                run += 1
                continue
            if run:
                row.append(str(run))
                run = 0
            letter = KIND_LETTERS[piece_kind(code)]
            row.append(letter if piece_color(code) == RED else letter.lower())
        if run:
            row.append(str(run))
        rows.append("".join(row))
    placement = "/".join(rows)
    return placement + (" b" if p.side_to_move == BLACK else "")


INITIAL_FEN = "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR"


def initial_position() -> Position:
    return parse_fen(INITIAL_FEN)


# ---------------------------------------------------------------------------
# Move generation.


def _is_attacked(board, sq: int, by: int) -> bool:
    """True if `sq` is attacked by a piece of color `by` (flying general excluded)."""
    rook = piece(by, ROOK)
    cannon = piece(by, CANNON)
    for ray in RAYS[sq]:
        first = None
        for t in ray:
            code = board[t]
            if not code:
                continue
            if first is None:
                if code == rook:
                    return True
                first = t
            else:
                if code == cannon:
                    return True
                break
    knight = piece(by, KNIGHT)
    for frm, leg in KNIGHT_REV[sq]:
        if board[frm] == knight and not board[leg]:
            return True
    pawn = piece(by, PAWN)
    f, r = sq % 9, sq // 9
    ahead = r + 1 if by == BLACK else r - 1  # square the attacking pawn stands on
    if 0 <= ahead < RANKS and board[square(f, ahead)] == pawn:
        return True
    for tf in (f - 1, f + 1):
        if 0 <= tf < FILES and board[square(tf, r)] == pawn and _crossed_river(r, by):
            return True
    return False


def _pseudo_targets(board, sq: int, code: int) -> Iterator[int]:
    color, kind = piece_color(code), piece_kind(code)
    if kind == ROOK:
        for ray in RAYS[sq]:
            for t in ray:
                if not board[t]:
                    yield t
                else:
                    if piece_color(board[t]) != color:
                        yield t
                    break
    elif kind == CANNON:
        for ray in RAYS[sq]:
            screened = False
            for t in ray:
                if not screened:
                    if not board[t]:
                        yield t
                    else:
                        screened = True
                elif board[t]:
                    if piece_color(board[t]) != color:
                        yield t
                    break
    elif kind == KNIGHT:
        for t, leg in KNIGHT_MOVES[sq]:
            if not board[leg] and (not board[t] or piece_color(board[t]) != color):
                yield t
    elif kind == PAWN:
        for t in PAWN_STEPS[color][sq]:
            if not board[t] or piece_color(board[t]) != color:
                yield t
    elif kind == KING:
        for t in KING_STEPS[color][sq]:
            if not board[t] or piece_color(board[t]) != color:
                yield t
    elif kind == ADVISOR:
        for t in ADVISOR_STEPS[color][sq]:
            if not board[t] or piece_color(board[t]) != color:
                yield t
    elif kind == BISHOP:
        for t, eye in BISHOP_MOVES[color][sq]:
            if not board[eye] and (not board[t] or piece_color(board[t]) != color):
                yield t


def legal_moves(p: Position) -> list[Move]:
    """All legal moves: pseudo-legal geometry filtered so the mover's King is
    not capturable and the Kings do not end up facing on an open file."""
    side = p.side_to_move
    enemy = 1 - side
    board = list(p.board)
    own_king = p.king_sq[side]
    kings = list(p.king_sq)
    moves = []
    for sq in range(SQUARES):
        code = board[sq]
        if not code or piece_color(code) != side:
            continue
        is_king = piece_kind(code) == KING
        for to in _pseudo_targets(board, sq, code):
            captured = board[to]
            board[to] = code
            board[sq] = EMPTY
            ksq = to if is_king else own_king
            kings[side] = ksq
            ok = not _kings_facing(board, kings[RED], kings[BLACK]) \
                and not _is_attacked(board, ksq, enemy)
            board[sq] = code
            board[to] = captured
            kings[side] = own_king
            if ok:
                moves.append(Move(sq, to, piece_kind(captured) if captured else None))
    return moves


def in_check(p: Position) -> bool:
    side = p.side_to_move
    return _is_attacked(p.board, p.king_sq[side], 1 - side)


def find_move(p: Position, text: str, moves: Optional[list[Move]] = None) -> Move:
    """Resolve 4-character move text against the legal moves of `p`."""
    frm, to = parse_move_text(text)
    for m in (moves if moves is not None else legal_moves(p)):
        if m.from_sq == frm and m.to_sq == to:
            return m
    raise IllegalMoveError(f"illegal move {text!r}")


def _apply_unchecked(p: Position, m: Move) -> Position:
    board = list(p.board)
    code = board[m.from_sq]
    captured = board[m.to_sq]
    board[m.to_sq] = code
    board[m.from_sq] = EMPTY
    key = p.key
    key ^= int(ZOBRIST[code - 1, m.from_sq]) ^ int(ZOBRIST[code - 1, m.to_sq])
    if captured:
        key ^= int(ZOBRIST[captured - 1, m.to_sq])
    key ^= ZOBRIST_SIDE
    kings = p.king_sq
    if piece_kind(code) == KING:
        kings = (m.to_sq, kings[BLACK]) if p.side_to_move == RED else (kings[RED], m.to_sq)
    return Position(
        tuple(board),
        1 - p.side_to_move,
        0 if captured else p.halfmove_clock + 1,
        p.ply + 1,
        p.repetition_key_history + (key,),
        key,
        kings,
    )


def apply_move(p: Position, m: Move) -> Position:
    """Apply a move after checking it is legal; raises IllegalMoveError otherwise."""
    for lm in legal_moves(p):
        if lm.from_sq == m.from_sq and lm.to_sq == m.to_sq:
            return _apply_unchecked(p, lm)
    raise IllegalMoveError(f"illegal move {m.text!r}")


def terminal_result(p: Position, moves: Optional[list[Move]] = None,
                    max_plies: int = DEFAULT_MAX_PLIES) -> Optional[GameResult]:
    """Terminal outcome, or None for an ongoing game.

    A side with no legal moves loses (checkmate and stalemate both lose in
    Xiangqi). Draws: threefold repetition, 120 plies without a capture, or
    the configurable overall ply cap.
    """
    if moves is None:
        moves = legal_moves(p)
    if not moves:
        return GameResult(score_red=1 if p.side_to_move == BLACK else -1)
    if p.repetition_key_history.count(p.key) >= 3:
        return GameResult(score_red=0)
    if p.halfmove_clock >= MATERIAL_DRAW_HALFMOVES:
        return GameResult(score_red=0)
    if p.ply >= max_plies:
        return GameResult(score_red=0)
    return None


def perft(p: Position, depth: int) -> int:
    """Leaf count of the legal-move tree at exactly `depth`."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth == 0:
        return 1
    moves = legal_moves(p)
    if depth == 1:
        return len(moves)
    return sum(perft(_apply_unchecked(p, m), depth - 1) for m in moves)


def flip_position(p: Position) -> Position:
    """Color-swap and rotate the board 180 degrees, flipping the side to move.

    The flipped position is the same game seen from the other player's chair.
    """
    board = [EMPTY] * SQUARES
    for sq, code in enumerate(p.board):
        if code:
            board[89 - sq] = piece(1 - piece_color(code), piece_kind(code))
    board = tuple(board)
    side = 1 - p.side_to_move
    key = compute_key(board, side)
    kings = (board.index(piece(RED, KING)), board.index(piece(BLACK, KING)))
    return Position(board, side, p.halfmove_clock, p.ply, (key,), key, kings)
