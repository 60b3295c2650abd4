"""Slow reference move generator, kept deliberately independent of board.py.

Everything here works on a rank-major character grid parsed straight from
the FEN text, generates pseudo-legal moves piece by piece, and filters them
by copying the grid and asking "can any enemy piece land on our King, or do
the Kings face each other?". No tables or helpers are shared with the fast
generator; the two are cross-checked against each other in the test suite.
"""

from __future__ import annotations

RED_PIECES = "KABNRCP"
BLACK_PIECES = "kabnrcp"


def grid_from_fen(fen: str) -> tuple[list[list[str]], str]:
    """Parse FEN into (grid[rank][file], side) with rank 0 = red's back rank."""
    parts = fen.split()
    placement = parts[0]
    side = "b" if len(parts) > 1 and parts[1] == "b" else "w"
    rows = placement.split("/")
    grid = [["."] * 9 for _ in range(10)]
    for i, row in enumerate(rows):
        rank = 9 - i
        f = 0
        for ch in row:
            if ch.isdigit():
                f += int(ch)
            else:
                grid[rank][f] = ch
                f += 1
    return grid, side


def _is_own(ch: str, side: str) -> bool:
    return ch != "." and (ch.isupper() if side == "w" else ch.islower())


def _is_enemy(ch: str, side: str) -> bool:
    return ch != "." and (ch.islower() if side == "w" else ch.isupper())


def _pseudo_moves(grid: list[list[str]], side: str) -> list[tuple[int, int, int, int]]:
    """All geometric moves for `side`, ignoring self-check."""
    moves = []
    for r in range(10):
        for f in range(9):
            ch = grid[r][f]
            if not _is_own(ch, side):
                continue
            kind = ch.upper()
            if kind == "R":
                for df, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    tf, tr = f + df, r + dr
                    while 0 <= tf < 9 and 0 <= tr < 10:
                        if grid[tr][tf] == ".":
                            moves.append((f, r, tf, tr))
                        else:
                            if _is_enemy(grid[tr][tf], side):
                                moves.append((f, r, tf, tr))
                            break
                        tf, tr = tf + df, tr + dr
            elif kind == "C":
                for df, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    tf, tr = f + df, r + dr
                    jumped = False
                    while 0 <= tf < 9 and 0 <= tr < 10:
                        if not jumped:
                            if grid[tr][tf] == ".":
                                moves.append((f, r, tf, tr))
                            else:
                                jumped = True
                        else:
                            if grid[tr][tf] != ".":
                                if _is_enemy(grid[tr][tf], side):
                                    moves.append((f, r, tf, tr))
                                break
                        tf, tr = tf + df, tr + dr
            elif kind == "N":
                for df, dr, lf, lr in ((1, 2, 0, 1), (-1, 2, 0, 1), (1, -2, 0, -1),
                                       (-1, -2, 0, -1), (2, 1, 1, 0), (2, -1, 1, 0),
                                       (-2, 1, -1, 0), (-2, -1, -1, 0)):
                    tf, tr = f + df, r + dr
                    if not (0 <= tf < 9 and 0 <= tr < 10):
                        continue
                    if grid[r + lr][f + lf] != ".":
                        continue  # hobbled leg
                    if not _is_own(grid[tr][tf], side):
                        moves.append((f, r, tf, tr))
            elif kind == "B":
                for df, dr in ((2, 2), (2, -2), (-2, 2), (-2, -2)):
                    tf, tr = f + df, r + dr
                    if not (0 <= tf < 9 and 0 <= tr < 10):
                        continue
                    own_half = tr <= 4 if side == "w" else tr >= 5
                    if not own_half:
                        continue
                    if grid[r + dr // 2][f + df // 2] != ".":
                        continue  # blocked eye
                    if not _is_own(grid[tr][tf], side):
                        moves.append((f, r, tf, tr))
            elif kind == "A":
                for df, dr in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    tf, tr = f + df, r + dr
                    in_palace = 3 <= tf <= 5 and (0 <= tr <= 2 if side == "w" else 7 <= tr <= 9)
                    if in_palace and not _is_own(grid[tr][tf], side):
                        moves.append((f, r, tf, tr))
            elif kind == "K":
                for df, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    tf, tr = f + df, r + dr
                    in_palace = 3 <= tf <= 5 and (0 <= tr <= 2 if side == "w" else 7 <= tr <= 9)
                    if in_palace and not _is_own(grid[tr][tf], side):
                        moves.append((f, r, tf, tr))
            elif kind == "P":
                crossed = r >= 5 if side == "w" else r <= 4
                tr = r + 1 if side == "w" else r - 1
                if 0 <= tr < 10 and not _is_own(grid[tr][f], side):
                    moves.append((f, r, f, tr))
                if crossed:
                    for tf in (f - 1, f + 1):
                        if 0 <= tf < 9 and not _is_own(grid[r][tf], side):
                            moves.append((f, r, tf, r))
    return moves


def _find_king(grid: list[list[str]], side: str) -> tuple[int, int]:
    target = "K" if side == "w" else "k"
    for r in range(10):
        for f in range(9):
            if grid[r][f] == target:
                return f, r
    raise ValueError("king missing")


def _attacks(grid: list[list[str]], ef: int, er: int, ch: str, kf: int, kr: int,
             enemy: str) -> bool:
    """Can the enemy piece `ch` at (ef, er) capture the square (kf, kr)?"""
    kind = ch.upper()
    if kind == "R":
        if ef == kf:
            step = 1 if kr > er else -1
            return all(grid[r][ef] == "." for r in range(er + step, kr, step))
        if er == kr:
            step = 1 if kf > ef else -1
            return all(grid[er][f] == "." for f in range(ef + step, kf, step))
        return False
    if kind == "C":
        if ef == kf:
            step = 1 if kr > er else -1
            between = sum(grid[r][ef] != "." for r in range(er + step, kr, step))
            return between == 1
        if er == kr:
            step = 1 if kf > ef else -1
            between = sum(grid[er][f] != "." for f in range(ef + step, kf, step))
            return between == 1
        return False
    if kind == "N":
        df, dr = kf - ef, kr - er
        if sorted((abs(df), abs(dr))) != [1, 2]:
            return False
        if abs(df) == 2:
            return grid[er][ef + df // 2] == "."
        return grid[er + dr // 2][ef] == "."
    if kind == "P":
        forward = kr - er == (1 if enemy == "w" else -1) and kf == ef
        crossed = er >= 5 if enemy == "w" else er <= 4
        sideways = crossed and er == kr and abs(kf - ef) == 1
        return forward or sideways
    # King facing is handled separately; Advisors and Bishops can never
    # reach the enemy palace.
    return False


def _legal(grid: list[list[str]], side: str, mv: tuple[int, int, int, int]) -> bool:
    f, r, tf, tr = mv
    g = [row[:] for row in grid]
    g[tr][tf] = g[r][f]
    g[r][f] = "."
    kf, kr = _find_king(g, side)
    try:
        ef, er = _find_king(g, "b" if side == "w" else "w")
    except ValueError:
        return True  # captured the enemy King (unreachable in legal play)
    if kf == ef and all(g[rr][kf] == "." for rr in range(min(kr, er) + 1, max(kr, er))):
        return False
    enemy = "b" if side == "w" else "w"
    for rr in range(10):
        for ff in range(9):
            ch = g[rr][ff]
            if _is_enemy(ch, side) and _attacks(g, ff, rr, ch, kf, kr, enemy):
                return False
    return True


def legal_move_set(fen: str) -> set[str]:
    """Legal moves of the position as a set of 4-character move strings."""
    grid, side = grid_from_fen(fen)
    files = "abcdefghi"
    out = set()
    for mv in _pseudo_moves(grid, side):
        if _legal(grid, side, mv):
            f, r, tf, tr = mv
            out.add(f"{files[f]}{r}{files[tf]}{tr}")
    return out
