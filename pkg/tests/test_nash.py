"""Max-entropy Nash solver tests against the support-enumeration oracle."""

import numpy as np
import pytest

from xqlab.nash import (NashSolveError, PayoffMatrix, fictitious_play,
                        fictitious_play_rect, nash_support,
                        solve_max_entropy_nash, solve_zero_sum)

from oracles import max_entropy_nash_oracle

RPS = np.array([[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])


def random_antisymmetric(rng, k):
    raw = rng.normal(size=(k, k))
    return 0.5 * (raw - raw.T)


class TestNamedCases:
    def test_rps_uniform(self):
        res = solve_max_entropy_nash(RPS)
        assert res.converged
        assert np.max(np.abs(res.p - 1 / 3)) < 1e-9
        assert res.max_violation <= 1e-6

    def test_zero_matrix_uniform(self):
        res = solve_max_entropy_nash(np.zeros((6, 6)))
        assert res.converged
        assert np.allclose(res.p, 1 / 6)

    def test_dominated_strategy_excluded(self):
        res = solve_max_entropy_nash(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert res.converged
        assert np.max(np.abs(res.p - np.array([1.0, 0.0]))) < 1e-6

    def test_single_strategy(self):
        res = solve_max_entropy_nash(np.zeros((1, 1)))
        assert res.p.tolist() == [1.0]

    def test_workhorse_50_random_matrices_vs_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            k = int(rng.integers(2, 7))
            A = random_antisymmetric(rng, k)
            res = solve_max_entropy_nash(A)
            expected = max_entropy_nash_oracle(A)
            assert res.converged
            assert np.max(np.abs(res.p - expected)) < 1e-4
            assert res.max_violation <= 1e-6


class TestResultContract:
    def test_feasibility_invariants(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            A = random_antisymmetric(rng, int(rng.integers(2, 8)))
            res = solve_max_entropy_nash(A)
            assert res.converged
            assert np.max(A @ res.p) <= 1e-6
            assert abs(res.p.sum() - 1.0) <= 1e-9
            assert res.p.min() >= -1e-12

    def test_restart_determinism(self):
        rng = np.random.default_rng(10)
        A = random_antisymmetric(rng, 6)
        base = solve_max_entropy_nash(A)
        for seed in range(3):
            p0 = np.random.default_rng(seed).dirichlet(np.ones(6))
            again = solve_max_entropy_nash(A, p0=p0)
            assert np.max(np.abs(again.p - base.p)) < 1e-6

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            k = 5
            A = random_antisymmetric(rng, k)
            perm = rng.permutation(k)
            P = np.eye(k)[perm]
            r1 = solve_max_entropy_nash(A)
            r2 = solve_max_entropy_nash(P @ A @ P.T)
            assert np.max(np.abs(r2.p - P @ r1.p)) < 1e-6

    def test_symmetrization_recorded(self):
        noisy = RPS + 0.01
        res = solve_max_entropy_nash(noisy)
        assert res.symmetrize_adjustment == pytest.approx(0.01)
        assert np.max(np.abs(res.p - 1 / 3)) < 1e-6

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            solve_max_entropy_nash(np.zeros((2, 3)))


class TestSupport:
    def test_uniform_support_full(self):
        res = solve_max_entropy_nash(RPS)
        assert nash_support(res) == {0, 1, 2}

    def test_pure_support_singleton(self):
        res = solve_max_entropy_nash(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert nash_support(res) == {0}

    def test_threshold(self):
        from xqlab.nash import NashResult
        res = NashResult(p=np.array([1.0 - 1e-9, 1e-9]), entropy=0.0,
                         max_violation=0.0, iterations=1, converged=True)
        assert nash_support(res, eps=1e-6) == {0}

    def test_unconverged_support_raises(self):
        from xqlab.nash import NashResult
        res = NashResult(p=np.array([1.0]), entropy=0.0, max_violation=1.0,
                         iterations=1, converged=False)
        with pytest.raises(NashSolveError):
            nash_support(res)


class TestFictitiousPlay:
    def test_rps_converges_to_uniform(self):
        p = fictitious_play(RPS, rounds=50_000)
        assert np.max(np.abs(p - 1 / 3)) < 0.01

    def test_value_cross_check_near_zero(self):
        rng = np.random.default_rng(12)
        A = random_antisymmetric(rng, 5)
        p = fictitious_play(A, rounds=100_000)
        # Antisymmetric games have value 0; the empirical mixture approaches it.
        assert abs(float(np.max(A @ p))) < 0.05


class TestZeroSumLP:
    def test_antisymmetric_value_zero(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            A = random_antisymmetric(rng, 5)
            p, q, value = solve_zero_sum(A)
            assert abs(value) < 1e-8

    def test_matching_pennies_value(self):
        B = np.array([[1.0, -1.0], [-1.0, 1.0]])
        p, q, value = solve_zero_sum(B)
        assert abs(value) < 1e-9
        assert np.allclose(p, 0.5, atol=1e-6)

    def test_lp_vs_fictitious_play(self):
        rng = np.random.default_rng(14)
        B = rng.uniform(-0.5, 0.5, size=(3, 4))
        _, _, lp_value = solve_zero_sum(B)
        _, _, fp_value = fictitious_play_rect(B, rounds=200_000)
        assert abs(lp_value - fp_value) < 5e-3


class TestPayoffMatrixType:
    def test_csv_round_trip(self):
        pm = PayoffMatrix.from_values(["a", "b", "c"], RPS)
        again = PayoffMatrix.from_csv(pm.to_csv())
        assert again.labels == ["a", "b", "c"]
        assert np.array_equal(again.matrix, pm.matrix)

    def test_construction_symmetrizes(self):
        pm = PayoffMatrix.from_values(["a", "b"], [[0.3, 1.0], [-1.0, 0.0]])
        assert np.max(np.abs(pm.matrix + pm.matrix.T)) == 0.0
        assert pm.matrix[0, 0] == 0.0

    def test_label_count_mismatch(self):
        with pytest.raises(ValueError):
            PayoffMatrix.from_values(["a"], RPS)
