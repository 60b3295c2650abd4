"""Synthetic games and datasets with known structure, for tests and demos."""

from __future__ import annotations

import numpy as np

from .meta import EloBin, GameRecord, elo_win_probability


def spinning_top_payoff(levels: int = 10, phases: int = 3,
                        transitive_gap: float = 1.0,
                        cycle_strength: float = 0.5) -> np.ndarray:
    """Antisymmetric payoff with a transitive ladder and in-level cycles.

    Strategy i sits at level i // phases with phase i % phases. Across
    levels the higher level wins by the level gap; within a level the
    phases beat each other cyclically (phase p beats phase p-1), so each
    level is a rock-paper-scissors ring. Best-response-to-latest dynamics
    therefore cycle forever inside the top ring, while the Nash mixture is
    uniform over the top ring.
    """
    k = levels * phases
    M = np.zeros((k, k))
    for i in range(k):
        li, pi = divmod(i, phases)
        for j in range(k):
            lj, pj = divmod(j, phases)
            if li != lj:
                M[i, j] = transitive_gap * (li - lj)
            elif (pi - pj) % phases == 1:
                M[i, j] = cycle_strength
            elif (pj - pi) % phases == 1:
                M[i, j] = -cycle_strength
    return M


def transitive_payoff(strengths: np.ndarray) -> np.ndarray:
    """Rank-1 antisymmetric matrix M[i, j] = s_i - s_j."""
    s = np.asarray(strengths, dtype=float)
    return s[:, None] - s[None, :]


def rps_padded_payoff(n_before: int, n_after: int, gap: float = 1.0,
                      cycle: float = 0.5) -> np.ndarray:
    """Transitive ladder with a 3-strategy cycle band in the middle."""
    strengths = list(range(n_before)) + [n_before] * 3 \
        + list(range(n_before + 1, n_before + 1 + n_after))
    M = transitive_payoff(np.asarray(strengths, dtype=float) * gap)
    ring = range(n_before, n_before + 3)
    for a, i in enumerate(ring):
        for b, j in enumerate(ring):
            if (a - b) % 3 == 1:
                M[i, j] = cycle
            elif (b - a) % 3 == 1:
                M[i, j] = -cycle
    return M


def generate_elo_records(bins: list[EloBin], games_per_pair: int,
                         rng: np.random.Generator) -> list[GameRecord]:
    """Records drawn from the Elo-logistic model between bin-midpoint players.

    Every bin pair plays `games_per_pair` games with colors alternating;
    outcomes are Bernoulli with the logistic win probability of the two
    midpoints (no draws).
    """
    records = []
    for i, bi in enumerate(bins):
        for j, bj in enumerate(bins):
            if i >= j:
                continue
            p_i_wins = elo_win_probability(bi.midpoint, bj.midpoint)
            for g in range(games_per_pair):
                red, black = (i, j) if g % 2 == 0 else (j, i)
                red_bin, black_bin = bins[red], bins[black]
                i_wins = rng.random() < p_i_wins
                red_is_i = red == i
                score_red = 1 if (i_wins == red_is_i) else -1
                records.append(GameRecord(
                    red=f"player-{red}", black=f"player-{black}",
                    score_red=score_red,
                    red_elo=red_bin.midpoint, black_elo=black_bin.midpoint))
    return records
