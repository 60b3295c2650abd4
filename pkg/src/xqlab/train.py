"""Training orchestration: self-play actor, trainer, and population rotations.

One process owns the trainable parameters; self-play games run either
inline (workers=1, bit-reproducible) or across a process pool. Opponents
are frozen checkpoint snapshots sampled per game from the Nash distribution
of the current population.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from . import nnet, population as popmod
from .config import RunConfig
from .encoding import move_table
from .evaluators import NetEvaluator
from .nash import solve_max_entropy_nash
from .replay import ReplayBuffer
from .search import SearchConfig
from .selfplay import MctsAgent, RandomAgent, play_game, play_match
from .storage import PopulationManifest, atomic_write_bytes, atomic_write_text

log = logging.getLogger(__name__)


@dataclass
class TrainStats:
    games: int = 0
    steps: int = 0
    rotations: int = 0
    last_loss: Optional[nnet.LossParts] = None
    wall_seconds: float = 0.0


class Trainer:
    """Sequential actor/trainer loop with Nash-guided opponent selection."""

    def __init__(self, cfg: RunConfig, run_dir: str | Path):
        self.cfg = cfg
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / "checkpoints").mkdir(exist_ok=True)
        atomic_write_text(self.run_dir / "config.json", cfg.to_json())

        torch.set_num_threads(max(1, cfg.torch_threads))
        torch.manual_seed(cfg.seed)
        self.rng = np.random.default_rng(cfg.seed)

        self.table = move_table()
        self.net = nnet.PolicyValueNet(
            nnet.Architecture(self.table.size, cfg.model.filters, cfg.model.blocks))
        self.optimizer = self._make_optimizer()
        self.replay = ReplayBuffer(cfg.train.replay_capacity)
        self.stats = TrainStats()
        self._lr_index = -1
        self._opponent_cache: dict[str, NetEvaluator] = {}

        first_label = "gen-000"
        first_path = self._save_labeled_checkpoint(first_label)
        self.population = popmod.Population(
            capacity=cfg.population.capacity, labels=[first_label],
            checkpoints={first_label: first_path})
        self.opponent_distribution = {first_label: 1.0}
        self._save_manifest(nash=[1.0])

    # -- setup helpers ------------------------------------------------------

    def _make_optimizer(self):
        t = self.cfg.train
        lr = t.learning_rates[0]
        if t.optimizer == "adam":
            return torch.optim.Adam(self.net.parameters(), lr=lr)
        if t.optimizer == "sgd":
            return torch.optim.SGD(self.net.parameters(), lr=lr, momentum=t.momentum)
        raise ValueError(f"unknown optimizer {t.optimizer!r}")

    def _set_lr_phase(self, fraction_done: float) -> None:
        rates = self.cfg.train.learning_rates
        idx = min(int(fraction_done * len(rates)), len(rates) - 1)
        if idx != self._lr_index:
            self._lr_index = idx
            for group in self.optimizer.param_groups:
                group["lr"] = rates[idx]

    # -- persistence --------------------------------------------------------

    def _serialize(self, tag: str) -> bytes:
        return nnet.serialize_checkpoint(self.net, self.table.checksum(), tag,
                                         extra={"steps": self.stats.steps,
                                                "games": self.stats.games})

    def _save_labeled_checkpoint(self, label: str) -> str:
        path = self.run_dir / "checkpoints" / f"{label}.ckpt"
        atomic_write_bytes(path, self._serialize(label))
        return str(path)

    def save_step_checkpoint(self) -> str:
        path = self.run_dir / "checkpoints" / f"step-{self.stats.steps:06d}.ckpt"
        blob = self._serialize(f"step-{self.stats.steps}")
        atomic_write_bytes(path, blob)
        atomic_write_bytes(self.run_dir / "checkpoints" / "latest.ckpt", blob)
        return str(path)

    def _save_manifest(self, nash: list[float]) -> None:
        manifest = PopulationManifest(
            labels=list(self.population.labels),
            checkpoints=dict(self.population.checkpoints),
            capacity=self.population.capacity,
            nash=nash,
            rotation_history=[{"rotation": self.stats.rotations,
                               "games": self.stats.games,
                               "steps": self.stats.steps}])
        manifest.save(self.run_dir / "population.json")

    # -- agents -------------------------------------------------------------

    def _challenger_agent(self, noisy: bool) -> MctsAgent:
        cfg = replace(self.cfg.search,
                      root_noise_fraction=self.cfg.selfplay_noise_fraction
                      if noisy else 0.0,
                      max_game_plies=self.cfg.selfplay_max_plies)
        return MctsAgent(NetEvaluator(nnet.NumpyNet.from_torch(self.net)), cfg,
                         name="challenger")

    def _opponent_agent(self, label: str, simulations: Optional[int] = None
                        ) -> MctsAgent:
        if label not in self._opponent_cache:
            path = self.population.checkpoints[label]
            with open(path, "rb") as fh:
                net, _ = nnet.deserialize_checkpoint(fh.read(), self.table.checksum())
            self._opponent_cache[label] = NetEvaluator(nnet.NumpyNet.from_torch(net))
        cfg = replace(self.cfg.search, root_noise_fraction=0.0,
                      max_game_plies=self.cfg.selfplay_max_plies)
        if simulations is not None:
            cfg = replace(cfg, simulations=simulations)
        return MctsAgent(self._opponent_cache[label], cfg, name=label)

    def _sample_opponent(self) -> str:
        labels = list(self.opponent_distribution.keys())
        weights = np.array(list(self.opponent_distribution.values()))
        weights = weights / weights.sum()
        return labels[int(self.rng.choice(len(labels), p=weights))]

    # -- core loop ----------------------------------------------------------

    def play_training_game(self) -> int:
        """One challenger-vs-opponent game; trajectory lands in the replay."""
        opponent_label = self._sample_opponent()
        challenger = self._challenger_agent(noisy=True)
        opponent = self._opponent_agent(opponent_label)
        challenger_is_red = self.stats.games % 2 == 0
        red, black = (challenger, opponent) if challenger_is_red \
            else (opponent, challenger)
        outcome = play_game(red, black, self.rng,
                            max_plies=self.cfg.selfplay_max_plies, record=True)
        self.replay.push_trajectory(outcome.trajectory)
        self.stats.games += 1
        return outcome.score_red

    def train_steps(self, n: int, fraction_done: float = 0.0) -> None:
        t = self.cfg.train
        if len(self.replay) < max(t.min_replay_fill, t.batch_size):
            return
        self._set_lr_phase(fraction_done)
        for _ in range(n):
            states, pis, zs = self.replay.sample(t.batch_size, self.rng,
                                                 self.table.size)
            self.stats.last_loss = nnet.train_step(
                self.net, self.optimizer, states, pis, zs,
                alpha=t.alpha, beta=t.beta)
            self.stats.steps += 1
            if self.stats.steps % t.saver_step == 0:
                self.save_step_checkpoint()

    def rotate_population(self) -> None:
        """Round-robin the current net against the population, solve, rotate."""
        self.stats.rotations += 1
        label = f"gen-{self.stats.rotations:03d}"
        path = self._save_labeled_checkpoint(label)
        self.population.checkpoints[label] = path

        pcfg = self.cfg.population
        eval_rng = np.random.default_rng(self.rng.integers(2**63))

        def engine(red: str, black: str) -> int:
            red_agent = self._rotation_agent(red, label, pcfg.eval_simulations)
            black_agent = self._rotation_agent(black, label, pcfg.eval_simulations)
            out = play_game(red_agent, black_agent, eval_rng,
                            max_plies=self.cfg.selfplay_max_plies)
            return out.score_red

        buffer = popmod.evaluate_challenger(label, self.population,
                                            pcfg.eval_games_per_pair, engine)
        labels = list(self.population.labels) + [label]
        payoff = popmod.fill_payoff(buffer, labels,
                                    normalize=pcfg.normalize_payoff)
        nash = solve_max_entropy_nash(payoff)
        choice, self.population = popmod.select_opponent_and_rotate(
            payoff, self.population, label, pcfg.top_n, self.rng, nash=nash)
        self.opponent_distribution = choice.distribution
        self._opponent_cache = {k: v for k, v in self._opponent_cache.items()
                                if k in self.population.labels}
        self._save_manifest(nash=[float(x) for x in nash.p])
        log.info("rotation %d: population=%s opponent dist=%s",
                 self.stats.rotations, self.population.labels, choice.distribution)

    def _rotation_agent(self, who: str, challenger_label: str,
                        simulations: int) -> MctsAgent:
        if who == challenger_label:
            agent = self._challenger_agent(noisy=False)
            agent.cfg = replace(agent.cfg, simulations=simulations,
                                temperature_cutoff_ply=0, final_temperature=0.0)
            return agent
        agent = self._opponent_agent(who, simulations)
        agent.cfg = replace(agent.cfg, temperature_cutoff_ply=0,
                            final_temperature=0.0)
        return agent

    def run(self, games: Optional[int] = None, minutes: Optional[float] = None,
            max_steps: Optional[int] = None) -> TrainStats:
        """Train until a games, wall-clock, or optimizer-step budget is hit."""
        if games is None and minutes is None and max_steps is None:
            raise ValueError("need at least one budget: games, minutes or max_steps")
        start = time.monotonic()
        deadline = start + minutes * 60.0 if minutes is not None else None

        def fraction_done() -> float:
            fracs = [0.0]
            if games:
                fracs.append(self.stats.games / games)
            if deadline:
                fracs.append((time.monotonic() - start) / (deadline - start))
            if max_steps:
                fracs.append(self.stats.steps / max_steps)
            return min(1.0, max(fracs))

        while True:
            if games is not None and self.stats.games >= games:
                break
            if deadline is not None and time.monotonic() >= deadline:
                break
            if max_steps is not None and self.stats.steps >= max_steps:
                break
            self.play_training_game()
            remaining = None if max_steps is None else max_steps - self.stats.steps
            n = self.cfg.train.steps_per_game
            if remaining is not None:
                n = min(n, remaining)
            self.train_steps(n, fraction_done())
            if self.stats.games % self.cfg.population.games_per_rotation == 0:
                self.rotate_population()
        self.save_step_checkpoint()
        self._save_manifest(nash=[])
        self.stats.wall_seconds = time.monotonic() - start
        return self.stats

    # -- evaluation ---------------------------------------------------------

    def evaluate_vs_random(self, games: int, simulations: int = 100,
                           max_plies: int = 400, seed: Optional[int] = None):
        agent = self._challenger_agent(noisy=False).greedy_copy()
        agent.cfg = replace(agent.cfg, simulations=simulations,
                            max_game_plies=max_plies)
        rng = np.random.default_rng(self.cfg.seed + 777 if seed is None else seed)
        return play_match(agent, RandomAgent(), games, rng, max_plies=max_plies)


def _worker_play_game(args: tuple) -> bytes:
    """Self-play one game in a worker process; returns a pickled trajectory."""
    import pickle
    (ckpt_blob, opponent_blob, challenger_is_red, search_cfg_dict,
     max_plies, seed) = args
    net, _ = nnet.deserialize_checkpoint(ckpt_blob)
    opp_net, _ = nnet.deserialize_checkpoint(opponent_blob)
    cfg = SearchConfig(**search_cfg_dict)
    challenger = MctsAgent(NetEvaluator(nnet.NumpyNet.from_torch(net)), cfg)
    opponent = MctsAgent(NetEvaluator(nnet.NumpyNet.from_torch(opp_net)), cfg)
    rng = np.random.default_rng(seed)
    red, black = (challenger, opponent) if challenger_is_red else (opponent, challenger)
    outcome = play_game(red, black, rng, max_plies=max_plies, record=True)
    return pickle.dumps(outcome.trajectory)


def parallel_selfplay(trainer: Trainer, games: int, workers: int) -> None:
    """Fill the replay buffer using a process pool of self-play workers.

    Games are independent given the frozen parameter snapshot; ordering of
    buffer insertion follows completion order, so multi-worker runs are not
    bit-reproducible (single-worker runs are).
    """
    import pickle
    ckpt = trainer._serialize("selfplay-snapshot")
    cfg = replace(trainer.cfg.search,
                  root_noise_fraction=trainer.cfg.selfplay_noise_fraction,
                  max_game_plies=trainer.cfg.selfplay_max_plies)
    cfg_dict = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    jobs = []
    for g in range(games):
        label = trainer._sample_opponent()
        with open(trainer.population.checkpoints[label], "rb") as fh:
            opp_blob = fh.read()
        seed = int(trainer.rng.integers(2**63))
        jobs.append((ckpt, opp_blob, (trainer.stats.games + g) % 2 == 0,
                     cfg_dict, trainer.cfg.selfplay_max_plies, seed))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for blob in pool.map(_worker_play_game, jobs):
            trainer.replay.push_trajectory(pickle.loads(blob))
            trainer.stats.games += 1
