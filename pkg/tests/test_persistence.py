"""Persistence round-trips, atomic writes, and corruption handling."""

import json
import os

import numpy as np
import pytest

from xqlab import storage
from xqlab.meta import GameRecord, ProfileRow
from xqlab.nash import PayoffMatrix


class TestRecords:
    def test_jsonl_round_trip(self, tmp_path):
        records = [
            GameRecord("alice", "bob", 1, red_elo=1510.0, black_elo=1490.0,
                       moves=["b0c2", "h9g7"]),
            GameRecord("bob", "alice", -1),
            GameRecord("alice", "carol", 0, timestamp="2024-01-01"),
        ]
        path = tmp_path / "games.jsonl"
        storage.write_records(path, records)
        assert storage.read_records(path) == records

    def test_bad_record_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"red": "a", "black": "b", "score_red": 1}\n'
                        '{"red": "a", "black": "b", "score_red": 9}\n')
        with pytest.raises(ValueError, match=":2:"):
            storage.read_records(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "sparse.jsonl"
        path.write_text('\n{"red": "a", "black": "b", "score_red": 0}\n\n')
        assert len(storage.read_records(path)) == 1


class TestPayoffCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        raw = rng.normal(size=(4, 4))
        pm = PayoffMatrix.from_values(["w", "x", "y", "z"], 0.5 * (raw - raw.T))
        path = tmp_path / "payoff.csv"
        storage.write_payoff(path, pm)
        again = storage.read_payoff(path)
        assert again.labels == pm.labels
        assert np.array_equal(again.matrix, pm.matrix)  # repr round-trip is exact


class TestProfileAndEmbedding:
    def test_profile_csv(self, tmp_path):
        rows = [ProfileRow(1025.0, 3, 1), ProfileRow(1075.0, 1, 0)]
        path = tmp_path / "profile.csv"
        storage.write_profile(path, rows)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "elo_midpoint,nash_cluster_size,rps_cycles_in_band"
        assert lines[1].startswith("1025.0,3,1")

    def test_embedding_csv(self, tmp_path):
        path = tmp_path / "embedding.csv"
        storage.write_embedding(path, ["a", "b"], np.array([[0.0, 1.0], [1.0, 0.0]]))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "label,x,y"
        assert len(lines) == 3


class TestManifest:
    def test_round_trip(self, tmp_path):
        manifest = storage.PopulationManifest(
            labels=["gen-000", "gen-001"],
            checkpoints={"gen-000": "a.ckpt", "gen-001": "b.ckpt"},
            capacity=5, nash=[0.25, 0.75],
            rotation_history=[{"rotation": 1}])
        path = tmp_path / "pop.json"
        manifest.save(path)
        again = storage.PopulationManifest.load(path)
        assert again == manifest

    def test_forward_version_refused(self, tmp_path):
        path = tmp_path / "pop.json"
        path.write_text(json.dumps({"labels": [], "checkpoints": {},
                                    "capacity": 1, "version": 99}))
        with pytest.raises(ValueError, match="version"):
            storage.PopulationManifest.load(path)


class TestAtomicWrite:
    def test_no_temp_files_left_behind(self, tmp_path):
        target = tmp_path / "out.bin"
        storage.atomic_write_bytes(target, b"hello")
        assert target.read_bytes() == b"hello"
        assert os.listdir(tmp_path) == ["out.bin"]

    def test_failed_write_leaves_original(self, tmp_path, monkeypatch):
        target = tmp_path / "out.bin"
        storage.atomic_write_bytes(target, b"original")

        real_replace = os.replace

        def exploding_replace(src, dst):
            raise OSError("simulated crash")

        monkeypatch.setattr(os, "replace", exploding_replace)
        with pytest.raises(OSError):
            storage.atomic_write_bytes(target, b"partial")
        monkeypatch.setattr(os, "replace", real_replace)
        assert target.read_bytes() == b"original"
        assert os.listdir(tmp_path) == ["out.bin"]
