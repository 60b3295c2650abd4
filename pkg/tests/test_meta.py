"""Meta-game measurement tests: Elo, record payoffs, clustering, cycles,
RP-Elo, RPP, exploitability, embedding, profile."""

import itertools

import numpy as np
import pytest

from xqlab import synth
from xqlab.meta import (EloBin, EloState, GameRecord, build_payoff_from_records,
                        elo_expected, elo_expected_q, elo_update,
                        elo_win_probability, exploitability,
                        exploitability_symmetric, gamescape_embedding,
                        make_bins, matrix_best_response_oracle, nash_clustering,
                        rp_elo, rps_cycles, spinning_top_profile, validate_bins)
from xqlab.nash import PayoffMatrix, solve_max_entropy_nash, solve_zero_sum
from xqlab.synth import (generate_elo_records, rps_padded_payoff,
                         spinning_top_payoff, transitive_payoff)

from oracles import count_three_cycles, grid_minimax_value

RPS = np.array([[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])


class TestElo:
    def test_equal_ratings_half(self):
        ew, eb = elo_expected(1500, 1500)
        assert ew == pytest.approx(0.5, abs=1e-9)
        assert eb == pytest.approx(0.5, abs=1e-9)

    def test_plus_400_closed_form(self):
        ew, _ = elo_expected(1500, 1100)
        assert ew == pytest.approx(10 / 11, abs=1e-9)
        assert elo_win_probability(1500, 1100) == pytest.approx(10 / 11, abs=1e-9)

    def test_q_form_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            rw, rb = rng.uniform(800, 2800, size=2)
            direct = elo_expected(rw, rb)
            q_form = elo_expected_q(rw, rb)
            assert direct[0] == pytest.approx(q_form[0], abs=1e-12)
            assert direct[1] == pytest.approx(q_form[1], abs=1e-12)

    def test_expected_scores_sum_to_one(self):
        ew, eb = elo_expected(1734.2, 1512.9)
        assert ew + eb == pytest.approx(1.0, abs=1e-12)

    def test_logistic_matches_power_form(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            rw, rb = rng.uniform(800, 2800, size=2)
            assert elo_win_probability(rw, rb) == pytest.approx(
                elo_expected(rw, rb)[0], abs=1e-12)

    def test_antisymmetry(self):
        assert elo_win_probability(1600, 1400) + elo_win_probability(1400, 1600) \
            == pytest.approx(1.0, abs=1e-12)

    def test_update_equal_ratings_win(self):
        state = EloState(k_factor=32.0)
        elo_update(state, "w", "b", 1.0)
        assert state.ratings["w"] == pytest.approx(1516.0)
        assert state.ratings["b"] == pytest.approx(1484.0)

    def test_update_draw_no_change(self):
        state = EloState(k_factor=32.0)
        elo_update(state, "w", "b", 0.5)
        assert state.ratings["w"] == pytest.approx(1500.0)
        assert state.ratings["b"] == pytest.approx(1500.0)

    def test_rating_sum_conserved_over_1000_updates(self):
        state = EloState(k_factor=32.0)
        players = [f"p{i}" for i in range(8)]
        for p in players:
            state.ensure(p)
        total0 = sum(state.ratings.values())
        rng = np.random.default_rng(2)
        for _ in range(1000):
            w, b = rng.choice(players, size=2, replace=False)
            elo_update(state, w, b, float(rng.choice([0.0, 0.5, 1.0])))
        assert sum(state.ratings.values()) == pytest.approx(total0, abs=1e-9)

    def test_bad_score_rejected(self):
        with pytest.raises(ValueError):
            elo_update(EloState(), "w", "b", 0.7)


class TestBins:
    def test_ordering_validation(self):
        with pytest.raises(ValueError):
            EloBin(1200, 1100)

    def test_partial_overlap_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            validate_bins([EloBin(1000, 1100), EloBin(1050, 1150)])

    def test_exact_duplicates_allowed(self):
        validate_bins([EloBin(1000, 1100), EloBin(1000, 1100)])

    def test_make_bins(self):
        bins = make_bins(1000, 1200, 50)
        assert len(bins) == 4
        assert bins[0].midpoint == 1025


class TestPayoffFromRecords:
    def test_identical_bins_empty_records_give_zero(self):
        bins = [EloBin(1000, 1100), EloBin(1000, 1100)]
        pm = build_payoff_from_records([], bins)
        assert pm.matrix[0, 1] == pytest.approx(0.0)

    def test_mean_score(self):
        bins = [EloBin(1000, 1100), EloBin(1100, 1200)]
        records = [
            GameRecord("a", "b", 1, red_elo=1050, black_elo=1150),
            GameRecord("a", "b", 1, red_elo=1050, black_elo=1150),
            GameRecord("a", "b", 0, red_elo=1050, black_elo=1150),
        ]
        pm = build_payoff_from_records(records, bins)
        # E_ij = 2/3 from the played games; the color-exchanged pass has no
        # records and falls back to the Elo prediction for the midpoints.
        fallback = 2 * elo_win_probability(1050, 1150) - 1
        assert pm.matrix[0, 1] == pytest.approx(0.5 * (2 / 3 + fallback))

    def test_exact_antisymmetry(self):
        rng = np.random.default_rng(3)
        bins = make_bins(1000, 1300, 50)
        records = generate_elo_records(bins, 30, rng)
        pm = build_payoff_from_records(records, bins)
        assert np.max(np.abs(pm.matrix + pm.matrix.T)) == 0.0

    def test_sign_pattern_matches_elo_model(self):
        rng = np.random.default_rng(4)
        bins = make_bins(1000, 1250, 50)  # 5 bins
        records = generate_elo_records(bins, 400, rng)  # 2000 games per pair... 400*10
        pm = build_payoff_from_records(records, bins)
        correct = 0
        total = 0
        for i in range(5):
            for j in range(5):
                if i == j:
                    continue
                total += 1
                want = np.sign(bins[i].midpoint - bins[j].midpoint)
                if np.sign(pm.matrix[i, j]) == want:
                    correct += 1
        assert correct / total >= 0.95

    def test_literal_mode_degenerate_for_equal_widths(self):
        bins = [EloBin(1000, 1100), EloBin(1600, 1700)]
        pm = build_payoff_from_records([], bins, mode="literal")
        # Equal half-widths give p = 0.5 regardless of the actual ratings.
        assert pm.matrix[0, 1] == pytest.approx(0.0)
        pm2 = build_payoff_from_records([], bins, mode="midpoint")
        assert pm2.matrix[0, 1] < 0  # weaker bin loses under the sane mode

    def test_missing_elo_rejected(self):
        bins = make_bins(1000, 1100, 50)
        with pytest.raises(ValueError, match="Elo"):
            build_payoff_from_records([GameRecord("a", "b", 1)], bins)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            build_payoff_from_records([], make_bins(0, 100, 50), mode="wild")


class TestNashClustering:
    def test_rps_single_cluster(self):
        clustering = nash_clustering(RPS)
        assert clustering.clusters == [[0, 1, 2]]

    def test_transitive_game_singletons_in_order(self):
        M = transitive_payoff(np.array([5.0, 4.0, 3.0, 2.0, 1.0]))
        clustering = nash_clustering(M)
        assert clustering.clusters == [[0], [1], [2], [3], [4]]

    def test_zero_matrix_one_cluster(self):
        clustering = nash_clustering(np.zeros((4, 4)))
        assert clustering.clusters == [[0, 1, 2, 3]]

    def test_partition_property_fuzzed(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            k = int(rng.integers(2, 9))
            raw = rng.normal(size=(k, k))
            M = 0.5 * (raw - raw.T)
            clustering = nash_clustering(M)
            flat = [i for c in clustering.clusters for i in c]
            assert sorted(flat) == list(range(k))
            assert len(flat) == len(set(flat))


class TestCycles:
    def test_rps_diagonal(self):
        count = rps_cycles(RPS)
        assert count.diag.tolist() == [1, 1, 1]
        assert count.total_cycles == 1

    def test_transitive_no_cycles(self):
        M = transitive_payoff(np.arange(6, dtype=float))
        count = rps_cycles(M)
        assert count.total_cycles == 0
        assert count.diag.sum() == 0

    def test_random_tournaments_match_bruteforce(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(3, 11))
            raw = rng.normal(size=(n, n))
            M = 0.5 * (raw - raw.T)
            count = rps_cycles(M)
            diag, total = count_three_cycles((M > 0).astype(int))
            assert count.diag.tolist() == diag.tolist()
            assert count.total_cycles == total
            assert 3 * count.total_cycles == count.diag.sum()
            assert (count.diag >= 0).all()


class TestRpElo:
    def test_draws_keep_everyone_at_1500(self):
        ratings = rp_elo(["a"], "c", lambda r, b: 0, games_per_pair=10)
        assert ratings["a"] == pytest.approx(1500.0)
        assert ratings["c"] == pytest.approx(1500.0)

    def test_always_winning_challenger_matches_sequential_recomputation(self):
        def engine(red, black):
            return 1 if red == "c" else -1  # challenger always wins

        ratings = rp_elo(["a"], "c", engine, games_per_pair=10, k_factor=32.0)
        rc, ra = 1500.0, 1500.0
        for _ in range(10):
            ec = 1.0 / (1.0 + 10 ** ((ra - rc) / 400))
            rc += 32.0 * (1 - ec)
            ra += 32.0 * (0 - (1 - ec))
        assert ratings["c"] == pytest.approx(rc)
        assert ratings["a"] == pytest.approx(ra)

    def test_order_dependence_documented(self):
        # Sequential Elo is order-dependent: losing to "a" before beating "b"
        # ends on a different rating than the reverse order.
        def engine(red, black):
            if "a" in (red, black):
                return 1 if red == "a" else -1  # a beats the challenger
            return 1 if red == "c" else -1      # the challenger beats b

        r1 = rp_elo(["a", "b"], "c", engine, games_per_pair=2)
        r2 = rp_elo(["b", "a"], "c", engine, games_per_pair=2)
        assert abs(r1["c"] - r2["c"]) > 1e-6

    def test_empty_population_rejected(self):
        with pytest.raises(ValueError):
            rp_elo([], "c", lambda r, b: 0)


class TestRpp:
    def test_self_comparison_zero(self):
        rng = np.random.default_rng(7)
        raw = rng.normal(size=(5, 5))
        M = 0.5 * (raw - raw.T)
        from xqlab.meta import rpp
        assert abs(rpp(M)) < 1e-6

    def test_dominant_population(self):
        from xqlab.meta import rpp
        assert rpp(np.ones((3, 4))) == pytest.approx(1.0)

    def test_antisymmetry_between_populations(self):
        from xqlab.meta import rpp
        rng = np.random.default_rng(8)
        for _ in range(20):
            B = rng.uniform(-0.5, 0.5, size=(int(rng.integers(2, 5)),
                                             int(rng.integers(2, 5))))
            assert rpp(B) == pytest.approx(-rpp(-B.T), abs=2e-6)

    def test_matches_grid_oracle(self):
        from xqlab.meta import rpp
        rng = np.random.default_rng(9)
        for _ in range(5):
            B = rng.uniform(-0.5, 0.5, size=(3, 4))
            assert rpp(B) == pytest.approx(grid_minimax_value(B, 0.01), abs=1e-2)


class TestExploitability:
    def test_uniform_rps_zero(self):
        p = np.full(3, 1 / 3)
        value = exploitability([p, p], matrix_best_response_oracle(RPS))
        assert abs(value) < 1e-6

    def test_pure_rock_one(self):
        rock = np.array([1.0, 0.0, 0.0])
        value = exploitability([rock, rock], matrix_best_response_oracle(RPS))
        assert value == 1.0

    def test_any_nash_profile_zero(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            raw = rng.normal(size=(5, 5))
            M = 0.5 * (raw - raw.T)
            res = solve_max_entropy_nash(M)
            assert exploitability_symmetric(M, res.p) <= 1e-6
            assert exploitability_symmetric(M, res.p) >= -1e-6

    def test_rectangular_profile(self):
        B = np.array([[1.0, -1.0], [-1.0, 1.0]])
        p, q, _ = solve_zero_sum(B)
        value = exploitability([p, q], matrix_best_response_oracle(B))
        assert abs(value) < 1e-6

    def test_two_players_only(self):
        with pytest.raises(ValueError):
            exploitability([np.ones(1)] * 3, matrix_best_response_oracle(RPS))


class TestGamescape:
    def test_rps_equilateral(self):
        emb = gamescape_embedding(RPS)
        d = [np.linalg.norm(emb.points[a] - emb.points[b])
             for a, b in itertools.combinations(range(3), 2)]
        assert max(d) - min(d) < 1e-6
        assert emb.rotation_strength == pytest.approx(np.sqrt(3), abs=1e-9)

    def test_transitive_collinear(self):
        s = np.array([0.2, 0.9, 1.7, 2.2, 3.8])
        emb = gamescape_embedding(transitive_payoff(s))
        pts = emb.points - emb.points.mean(axis=0)
        _, sv, _ = np.linalg.svd(pts)
        assert sv[1] < 1e-6  # perpendicular residual vanishes

    def test_distances_invariant_under_permutation(self):
        rng = np.random.default_rng(11)
        raw = rng.normal(size=(6, 6))
        M = 0.5 * (raw - raw.T)
        perm = rng.permutation(6)
        P = np.eye(6)[perm]
        d1 = _pairwise(gamescape_embedding(M).points)
        d2 = _pairwise(gamescape_embedding(P @ M @ P.T).points[np.argsort(perm)])
        assert np.max(np.abs(np.sort(d1) - np.sort(d2))) < 1e-8

    def test_outlier_removed_from_regression(self):
        rng = np.random.default_rng(12)
        x = np.linspace(-1, 1, 20)
        y = 0.3 * x ** 2 + 0.1 * x + rng.normal(scale=1e-3, size=20)
        y[7] += 5.0  # gross outlier
        from xqlab.meta import _quadratic_fit_with_outliers
        coef, inliers = _quadratic_fit_with_outliers(np.column_stack([x, y]), 2.5)
        assert not inliers[7]
        assert coef[0] == pytest.approx(0.3, abs=0.05)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            gamescape_embedding(np.zeros((2, 2)))


def _pairwise(points):
    return np.array([np.linalg.norm(a - b)
                     for a, b in itertools.combinations(points, 2)])


class TestSpinningTopProfile:
    def test_transitive_profile_flat(self):
        bins = make_bins(1000, 1250, 50)
        M = transitive_payoff(np.array([b.midpoint for b in bins]) / 100.0)
        pm = PayoffMatrix.from_values([b.label for b in bins], M)
        rows = spinning_top_profile(pm, bins)
        assert [r.nash_cluster_size for r in rows] == [1] * 5
        assert [r.rps_cycles_in_band for r in rows] == [0] * 5

    def test_rps_band_in_middle(self):
        M = rps_padded_payoff(2, 2)
        bins = make_bins(1000, 1000 + 50 * M.shape[0], 50)
        pm = PayoffMatrix.from_values([b.label for b in bins], M)
        rows = spinning_top_profile(pm, bins)
        sizes = [r.nash_cluster_size for r in rows]
        cycles = [r.rps_cycles_in_band for r in rows]
        assert sizes[2:5] == [3, 3, 3]     # the cycle band clusters together
        assert sizes[0] == sizes[-1] == 1  # extremes stay singletons
        assert cycles[2:5] == [1, 1, 1]

    def test_every_bin_emits_a_row(self):
        bins = make_bins(1000, 1200, 50)
        pm = build_payoff_from_records([], bins)  # all bins empty: Elo fallback
        rows = spinning_top_profile(pm, bins)
        assert len(rows) == len(bins)
        assert all(r.rps_cycles_in_band == 0 for r in rows)

    def test_size_mismatch_rejected(self):
        pm = PayoffMatrix.from_values(["a", "b", "c"], RPS)
        with pytest.raises(ValueError):
            spinning_top_profile(pm, make_bins(0, 100, 50))
