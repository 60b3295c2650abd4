"""CLI plumbing tests."""

import json
import os

import numpy as np
import pytest

from xqlab import cli, storage, synth
from xqlab.meta import make_bins


@pytest.fixture(scope="module")
def records_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("records") / "games.jsonl"
    rng = np.random.default_rng(21)
    bins = make_bins(1000, 1250, 50)
    storage.write_records(path, synth.generate_elo_records(bins, 40, rng))
    return path


class TestAnalyze:
    def test_emits_payoff_and_profile(self, records_file, tmp_path):
        out = tmp_path / "analysis"
        rc = cli.main(["analyze", "--records", str(records_file),
                       "--bin-width", "50", "--out-dir", str(out)])
        assert rc == 0
        assert (out / "payoff.csv").exists()
        assert (out / "profile.csv").exists()
        assert (out / "embedding.csv").exists()
        assert (out / "payoff.png").exists()
        assert (out / "profile.png").exists()
        payoff = storage.read_payoff(out / "payoff.csv")
        assert np.max(np.abs(payoff.matrix + payoff.matrix.T)) == 0.0

    def test_no_figures_flag(self, records_file, tmp_path):
        out = tmp_path / "analysis"
        rc = cli.main(["analyze", "--records", str(records_file),
                       "--out-dir", str(out), "--no-figures"])
        assert rc == 0
        assert not (out / "payoff.png").exists()

    def test_missing_records_is_usage_error(self, tmp_path):
        rc = cli.main(["analyze", "--records", str(tmp_path / "nope.jsonl"),
                       "--out-dir", str(tmp_path)])
        assert rc == 2


class TestPerft:
    def test_initial_depth_one(self, capsys):
        rc = cli.main(["perft", "--depth", "1"])
        assert rc == 0
        assert "perft(1) = 44" in capsys.readouterr().out

    def test_per_move_split(self, capsys):
        rc = cli.main(["perft", "--depth", "2", "--per-move"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "perft(2) = 1920" in out
        assert out.count(":") >= 44


class TestEvaluate:
    def test_rpp_of_identical_manifests_is_zero(self, tmp_path, capsys):
        run = tmp_path / "run"
        rc = cli.main(["train", "--out", str(run), "--games", "2",
                       "--set", "search.simulations=4",
                       "--set", "selfplay_max_plies=30",
                       "--set", "population.games_per_rotation=1",
                       "--set", "population.eval_simulations=4",
                       "--seed", "5"])
        assert rc == 0
        capsys.readouterr()  # flush the train command's output
        manifest = str(run / "population.json")
        rc = cli.main(["evaluate", "rpp", "--pop-a", manifest,
                       "--pop-b", manifest, "--games-per-pair", "2",
                       "--simulations", "4",
                       "--set", "search.max_game_plies=40",
                       "--out", str(tmp_path / "rpp.json")])
        assert rc == 0
        out = capsys.readouterr().out
        value = float(out.split("=")[1].strip())
        assert abs(value) <= 1e-6
        assert json.loads((tmp_path / "rpp.json").read_text())["rpp"] == value

    def test_exploitability_uniform_rps(self, tmp_path, capsys):
        from xqlab.nash import PayoffMatrix
        rps = PayoffMatrix.from_values(
            ["rock", "paper", "scissors"],
            [[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
        path = tmp_path / "rps.csv"
        storage.write_payoff(path, rps)
        rc = cli.main(["evaluate", "exploitability", "--payoff", str(path),
                       "--uniform"])
        assert rc == 0
        value = float(capsys.readouterr().out.split("=")[1].split()[0])
        assert abs(value) < 1e-6

    def test_exploitability_bad_mixture_usage_error(self, tmp_path):
        from xqlab.nash import PayoffMatrix
        storage.write_payoff(tmp_path / "m.csv", PayoffMatrix.from_values(
            ["a", "b"], [[0, 1], [-1, 0]]))
        rc = cli.main(["evaluate", "exploitability",
                       "--payoff", str(tmp_path / "m.csv"),
                       "--mixture", "0.9,0.9"])
        assert rc == 2


class TestTrain:
    def test_train_writes_run_artifacts(self, tmp_path):
        run = tmp_path / "run"
        rc = cli.main(["train", "--out", str(run), "--games", "1",
                       "--set", "search.simulations=4",
                       "--set", "selfplay_max_plies=20",
                       "--set", "population.games_per_rotation=5"])
        assert rc == 0
        assert (run / "config.json").exists()
        assert (run / "population.json").exists()
        assert (run / "checkpoints" / "latest.ckpt").exists()

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        rc = cli.main(["train", "--out", str(tmp_path), "--games", "1",
                       "--set", "search.simulation=4"])
        assert rc == 2
