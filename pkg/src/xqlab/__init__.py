"""Xiangqi engine, population-based training, and meta-game analysis."""

from .board import (GameResult, IllegalMoveError, FenError, Move, Position,
                    apply_move, format_fen, initial_position, legal_moves,
                    parse_fen, perft, terminal_result)
from .nash import (NashResult, PayoffMatrix, fictitious_play, nash_support,
                   solve_max_entropy_nash, solve_zero_sum)
from .meta import (EloBin, EloState, GameRecord, build_payoff_from_records,
                   elo_expected, elo_update, elo_win_probability,
                   exploitability, gamescape_embedding, nash_clustering,
                   rp_elo, rpp, rps_cycles, spinning_top_profile)
from .search import SearchConfig, SearchOutput, complexity_estimate, search, select_move

__version__ = "0.1.0"
