"""Meta-game measurements over populations and game records.

Covers Elo bookkeeping, payoff matrices built from Elo-binned records,
Nash clustering, 3-cycle counting, relative population Elo and performance,
exploitability, the Schur gamescape embedding, and the non-transitivity
profile emitted for plotting.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from .nash import (NashResult, NashSolveError, PayoffMatrix, nash_support,
                   solve_max_entropy_nash, solve_zero_sum)

log = logging.getLogger(__name__)

LOG10_OVER_400 = math.log(10.0) / 400.0


@dataclass(frozen=True)
class GameRecord:
    """One game between two identified players; Elo fields are optional."""

    red: str
    black: str
    score_red: int
    red_elo: Optional[float] = None
    black_elo: Optional[float] = None
    moves: Optional[list[str]] = None
    timestamp: Optional[str] = None

    def __post_init__(self):
        if self.score_red not in (-1, 0, 1):
            raise ValueError(f"score_red must be -1/0/1, got {self.score_red}")
        if not self.red or not self.black:
            raise ValueError("player ids must be non-empty")

    def to_json(self) -> str:
        payload = {"red": self.red, "black": self.black, "score_red": self.score_red}
        if self.red_elo is not None:
            payload["red_elo"] = self.red_elo
        if self.black_elo is not None:
            payload["black_elo"] = self.black_elo
        if self.moves is not None:
            payload["moves"] = self.moves
        if self.timestamp is not None:
            payload["timestamp"] = self.timestamp
        return json.dumps(payload)

    @classmethod
    def from_json(cls, line: str) -> "GameRecord":
        d = json.loads(line)
        return cls(red=d["red"], black=d["black"], score_red=int(d["score_red"]),
                   red_elo=d.get("red_elo"), black_elo=d.get("black_elo"),
                   moves=d.get("moves"), timestamp=d.get("timestamp"))


@dataclass(frozen=True)
class EloBin:
    """Half-open rating interval [low, high)."""

    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"bin low must be below high: [{self.low}, {self.high})")

    def contains(self, rating: float) -> bool:
        return self.low <= rating < self.high

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.high - self.low)

    @property
    def label(self) -> str:
        return f"{self.low:g}-{self.high:g}"


def make_bins(low: float, high: float, width: float) -> list[EloBin]:
    edges = np.arange(low, high, width)
    return [EloBin(float(e), float(e + width)) for e in edges]


def validate_bins(bins: Sequence[EloBin]) -> None:
    """Reject partial overlap between distinct bins; exact duplicates pass."""
    for i, a in enumerate(bins):
        for b in bins[i + 1:]:
            if (a.low, a.high) == (b.low, b.high):
                continue
            if a.low < b.high and b.low < a.high:
                raise ValueError(f"overlapping bins {a.label} and {b.label}")


# ---------------------------------------------------------------------------
# Elo rating system.


def elo_expected(rating_w: float, rating_b: float) -> tuple[float, float]:
    """Expected scores (E_w, E_b); they sum to one."""
    ew = 1.0 / (1.0 + 10.0 ** ((rating_b - rating_w) / 400.0))
    eb = 1.0 / (1.0 + 10.0 ** ((rating_w - rating_b) / 400.0))
    return ew, eb


def elo_expected_q(rating_w: float, rating_b: float) -> tuple[float, float]:
    """Same expectation through the Q = 10^(R/400) form; kept as a cross-check."""
    qw = 10.0 ** (rating_w / 400.0)
    qb = 10.0 ** (rating_b / 400.0)
    return qw / (qw + qb), qb / (qw + qb)


def elo_win_probability(rating_w: float, rating_b: float) -> float:
    """Logistic win probability; identical to elo_expected analytically."""
    return 1.0 / (1.0 + math.exp(-LOG10_OVER_400 * (rating_w - rating_b)))


@dataclass
class EloState:
    """Ratings table with a shared K-factor."""

    k_factor: float = 32.0
    ratings: dict[str, float] = field(default_factory=dict)
    initial: float = 1500.0

    def rating(self, player: str) -> float:
        return self.ratings.get(player, self.initial)

    def ensure(self, player: str) -> None:
        self.ratings.setdefault(player, self.initial)


def elo_update(state: EloState, white: str, black: str, score_w: float) -> EloState:
    """Update both ratings for one game; score_w is 1, 0.5 or 0."""
    if score_w not in (0.0, 0.5, 1.0):
        raise ValueError(f"score_w must be 1, 0.5 or 0, got {score_w}")
    state.ensure(white)
    state.ensure(black)
    rw, rb = state.ratings[white], state.ratings[black]
    ew, eb = elo_expected(rw, rb)
    state.ratings[white] = rw + state.k_factor * (score_w - ew)
    state.ratings[black] = rb + state.k_factor * ((1.0 - score_w) - eb)
    return state


# ---------------------------------------------------------------------------
# Payoff matrix from Elo-binned records.


def _bin_representative(b: EloBin, mode: str) -> float:
    if mode == "midpoint":
        return b.midpoint
    if mode == "literal":
        # The documented fallback uses the bin half-width as the rating
        # representative, which collapses to 0 for equal-width bins; kept
        # selectable for comparability, midpoint is the sane default.
        return b.half_width
    raise ValueError(f"unknown mode {mode!r}; expected 'midpoint' or 'literal'")


def _expected_score(red_scores: list[int], negate: bool, bin_i: EloBin, bin_j: EloBin,
                    mode: str) -> float:
    """Mean score of the bin-i player, or the Elo-predicted fallback.

    `red_scores` are score_red values; `negate` flips them when the bin-i
    player held black in those games.
    """
    if not red_scores:
        ri = _bin_representative(bin_i, mode)
        rj = _bin_representative(bin_j, mode)
        return 2.0 * elo_win_probability(ri, rj) - 1.0
    total = float(sum(red_scores))
    if negate:
        total = -total
    return total / len(red_scores)


def build_payoff_from_records(records: Iterable[GameRecord], bins: Sequence[EloBin],
                              mode: str = "midpoint") -> PayoffMatrix:
    """Antisymmetric bin-vs-bin payoff matrix averaged over both colors.

    For each ordered bin pair the expected score of the bin-i player is the
    mean game score over matching records, falling back to the Elo-predicted
    2p-1 when no record matches; the matrix entry averages the two color
    assignments, which makes the result exactly antisymmetric.
    """
    _bin_representative(EloBin(0, 1), mode)  # validate mode early
    validate_bins(bins)
    m = len(bins)
    # buckets[(a, b)] holds score_red for records with the bin-a player red
    # and the bin-b player black.
    buckets: dict[tuple[int, int], list[int]] = {}
    for rec in records:
        if rec.red_elo is None or rec.black_elo is None:
            raise ValueError(f"record {rec.red} vs {rec.black} lacks Elo ratings")
        red_bins = [i for i, b in enumerate(bins) if b.contains(rec.red_elo)]
        black_bins = [j for j, b in enumerate(bins) if b.contains(rec.black_elo)]
        for a in red_bins:
            for b in black_bins:
                if a != b:
                    buckets.setdefault((a, b), []).append(rec.score_red)
    matrix = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            # Both expectations are from the bin-i player's perspective: once
            # holding red, once holding black (the "colors exchanged" pass).
            e_ij = _expected_score(buckets.get((i, j), []), False,
                                   bins[i], bins[j], mode)
            e_ji = _expected_score(buckets.get((j, i), []), True,
                                   bins[i], bins[j], mode)
            matrix[i, j] = 0.5 * (e_ij + e_ji)
            matrix[j, i] = -matrix[i, j]
    return PayoffMatrix.from_values([b.label for b in bins], matrix)


# ---------------------------------------------------------------------------
# Nash clustering and cycle structure.


@dataclass
class NashClustering:
    """Ordered partition of strategies by repeated Nash-support removal."""

    clusters: list[list[int]]

    def cluster_of(self, index: int) -> int:
        for c, members in enumerate(self.clusters):
            if index in members:
                return c
        raise KeyError(index)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]


def nash_clustering(payoff: PayoffMatrix | np.ndarray,
                    tol: float = 1e-6) -> NashClustering:
    """Iteratively peel the max-entropy Nash support off the restricted game."""
    M = payoff.matrix if isinstance(payoff, PayoffMatrix) else np.asarray(payoff, float)
    remaining = list(range(M.shape[0]))
    clusters: list[list[int]] = []
    while remaining:
        sub = M[np.ix_(remaining, remaining)]
        res = solve_max_entropy_nash(sub, tol=tol)
        if not res.converged:
            raise NashSolveError(
                f"nash clustering stalled with {len(remaining)} strategies left; "
                f"clusters so far: {clusters}")
        support = sorted(nash_support(res))
        cluster = [remaining[i] for i in support]
        clusters.append(cluster)
        remaining = [s for i, s in enumerate(remaining) if i not in support]
    return NashClustering(clusters)


@dataclass
class CycleCount:
    diag: np.ndarray
    total_cycles: int


def rps_cycles(payoff: PayoffMatrix | np.ndarray) -> CycleCount:
    """3-cycle membership per strategy via the cubed beat-relation matrix."""
    M = payoff.matrix if isinstance(payoff, PayoffMatrix) else np.asarray(payoff, float)
    A = (M > 0).astype(np.int64)
    diag = np.diag(np.linalg.matrix_power(A, 3)).copy()
    total = int(diag.sum()) // 3
    return CycleCount(diag=diag, total_cycles=total)


# ---------------------------------------------------------------------------
# Population metrics.


def rp_elo(population: Sequence[str], challenger: str,
           engine: Callable[[str, str], int], games_per_pair: int = 100,
           k_factor: float = 32.0, initial: float = 1500.0) -> dict[str, float]:
    """Relative population Elo: everyone starts at 1500, the challenger plays
    `games_per_pair` games against each member with alternating colors.

    `engine(red, black)` returns the red score (+1/0/-1). Engine failures
    abort the remaining games of that pairing; the partial ratings are
    returned with the failure logged.
    """
    if not population:
        raise ValueError("population is empty")
    state = EloState(k_factor=k_factor, initial=initial)
    state.ensure(challenger)
    for member in population:
        state.ensure(member)
    for member in population:
        for g in range(games_per_pair):
            red, black = (challenger, member) if g % 2 == 0 else (member, challenger)
            try:
                score_red = engine(red, black)
            except Exception:
                log.exception("engine failed on %s vs %s; pairing left incomplete",
                              red, black)
                break
            score_w = {1: 1.0, 0: 0.5, -1: 0.0}[score_red]
            elo_update(state, red, black, score_w)
    return dict(state.ratings)


def rpp(payoff_ab: np.ndarray) -> float:
    """Relative population performance: p^T M q at a Nash point of M.

    The value of a zero-sum game is unique, so any equilibrium gives the
    same number; positive means population A genuinely outperforms B.
    """
    B = np.asarray(payoff_ab, dtype=float)
    p, q, _value = solve_zero_sum(B)
    return float(p @ B @ q)


def exploitability(profile: Sequence[np.ndarray],
                   best_response_oracle: Callable[[int, np.ndarray], float]) -> float:
    """Mean best-response payoff against each seat of a 2-player profile.

    `best_response_oracle(seat, opponent_mixture)` returns the payoff the
    best response earns against the mixture faced by `seat`'s opponent. In
    zero-sum games this is 0 exactly at Nash profiles.
    """
    n = len(profile)
    if n != 2:
        raise ValueError("exploitability here is defined for 2-player profiles")
    total = 0.0
    for seat in range(n):
        opponent = profile[1 - seat]
        total += best_response_oracle(seat, opponent)
    return total / n


def matrix_best_response_oracle(payoff: np.ndarray) -> Callable[[int, np.ndarray], float]:
    """Exact argmax best-response oracle for a matrix game.

    Row seat earns max of (M q); column seat of a zero-sum game earns
    max of (-M^T p).
    """
    M = np.asarray(payoff, dtype=float)

    def oracle(seat: int, opponent_mixture: np.ndarray) -> float:
        if seat == 0:
            return float(np.max(M @ opponent_mixture))
        return float(np.max(-M.T @ opponent_mixture))

    return oracle


def exploitability_symmetric(payoff: np.ndarray, p: np.ndarray) -> float:
    """Exploitability of both players using mixture p in an antisymmetric game."""
    M = np.asarray(payoff, dtype=float)
    return exploitability([np.asarray(p), np.asarray(p)],
                          matrix_best_response_oracle(M))


# ---------------------------------------------------------------------------
# Gamescape embedding and spinning-top profile.


@dataclass
class GamescapeEmbedding:
    points: np.ndarray               # k x 2
    rotation_strength: float         # |t| of the selected Schur block
    regression: np.ndarray           # quadratic fit coefficients (2, 1, 0)
    inliers: np.ndarray              # boolean mask after z-score pruning


def gamescape_embedding(payoff: PayoffMatrix | np.ndarray,
                        z_cutoff: float = 2.5) -> GamescapeEmbedding:
    """2-D strategy embedding from the principal rotation of the Schur form.

    The real Schur form of an antisymmetric matrix is block diagonal with
    2x2 rotation blocks; the two Schur vectors of the strongest block,
    scaled by sqrt of its magnitude, place each strategy in the plane.
    A second-order polynomial is fit through the points after discarding
    residual outliers beyond the z-score cutoff.
    """
    M = payoff.matrix if isinstance(payoff, PayoffMatrix) else np.asarray(payoff, float)
    k = M.shape[0]
    if k < 3:
        raise ValueError("gamescape embedding needs at least 3 strategies")
    T, Q = scipy.linalg.schur(M, output="real")
    blocks = [(abs(T[i, i + 1]), i) for i in range(k - 1) if abs(T[i + 1, i]) > 1e-12]
    if not blocks:
        points = np.zeros((k, 2))
        strength = 0.0
    else:
        strength, i = max(blocks)
        points = Q[:, [i, i + 1]] * math.sqrt(strength)

    regression, inliers = _quadratic_fit_with_outliers(points, z_cutoff)
    return GamescapeEmbedding(points=points, rotation_strength=float(strength),
                              regression=regression, inliers=inliers)


def _quadratic_fit_with_outliers(points: np.ndarray, z_cutoff: float
                                 ) -> tuple[np.ndarray, np.ndarray]:
    x, y = points[:, 0], points[:, 1]
    inliers = np.ones(len(x), dtype=bool)
    if len(x) < 3 or float(np.ptp(x)) < 1e-12:
        return np.zeros(3), inliers
    with np.errstate(all="ignore"):
        coef = np.polyfit(x, y, 2)
        residuals = y - np.polyval(coef, x)
        sd = residuals.std()
        if sd > 0:
            z = (residuals - residuals.mean()) / sd
            inliers = np.abs(z) <= z_cutoff
        if inliers.sum() >= 3 and float(np.ptp(x[inliers])) > 1e-12:
            coef = np.polyfit(x[inliers], y[inliers], 2)
    return np.asarray(coef, dtype=float), inliers


@dataclass
class ProfileRow:
    elo_midpoint: float
    nash_cluster_size: int
    rps_cycles_in_band: int


def spinning_top_profile(payoff: PayoffMatrix, bins: Sequence[EloBin]
                         ) -> list[ProfileRow]:
    """Raw non-transitivity profile rows, one per Elo bin, for plotting."""
    if payoff.size != len(bins):
        raise ValueError("payoff size does not match bin count")
    clustering = nash_clustering(payoff)
    cycles = rps_cycles(payoff)
    rows = []
    for i, b in enumerate(bins):
        cluster = clustering.clusters[clustering.cluster_of(i)]
        rows.append(ProfileRow(elo_midpoint=b.midpoint,
                               nash_cluster_size=len(cluster),
                               rps_cycles_in_band=int(cycles.diag[i])))
    return rows
