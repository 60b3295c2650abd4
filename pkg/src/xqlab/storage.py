"""File formats and crash-safe persistence.

All writes go through write-temp-then-rename so a crash mid-write can never
leave a loadable-but-corrupt file behind.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .meta import GameRecord, ProfileRow
from .nash import PayoffMatrix


def atomic_write_bytes(path: str | Path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def write_records(path: str | Path, records: Iterable[GameRecord]) -> None:
    atomic_write_text(path, "".join(r.to_json() + "\n" for r in records))


def read_records(path: str | Path) -> list[GameRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(GameRecord.from_json(line))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record: {exc}") from exc
    return records


def write_payoff(path: str | Path, payoff: PayoffMatrix) -> None:
    atomic_write_text(path, payoff.to_csv())


def read_payoff(path: str | Path) -> PayoffMatrix:
    with open(path) as fh:
        return PayoffMatrix.from_csv(fh.read())


def write_profile(path: str | Path, rows: Sequence[ProfileRow]) -> None:
    buf = ["elo_midpoint,nash_cluster_size,rps_cycles_in_band"]
    for r in rows:
        buf.append(f"{r.elo_midpoint!r},{r.nash_cluster_size},{r.rps_cycles_in_band}")
    atomic_write_text(path, "\n".join(buf) + "\n")


def write_embedding(path: str | Path, labels: Sequence[str], points: np.ndarray) -> None:
    buf = ["label,x,y"]
    for lbl, (x, y) in zip(labels, points):
        buf.append(f"{lbl},{float(x)!r},{float(y)!r}")
    atomic_write_text(path, "\n".join(buf) + "\n")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    import io
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


MANIFEST_VERSION = 1


@dataclass
class PopulationManifest:
    """On-disk record of a population: labels, checkpoints, last Nash solve."""

    labels: list[str]
    checkpoints: dict[str, str]
    capacity: int
    nash: list[float] = field(default_factory=list)
    rotation_history: list[dict] = field(default_factory=list)
    version: int = MANIFEST_VERSION

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(asdict(self), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "PopulationManifest":
        with open(path) as fh:
            data = json.load(fh)
        version = data.get("version", 0)
        if version > MANIFEST_VERSION:
            raise ValueError(
                f"manifest version {version} is newer than supported {MANIFEST_VERSION}")
        return cls(labels=list(data["labels"]),
                   checkpoints=dict(data["checkpoints"]),
                   capacity=int(data["capacity"]),
                   nash=[float(x) for x in data.get("nash", [])],
                   rotation_history=list(data.get("rotation_history", [])),
                   version=version)
