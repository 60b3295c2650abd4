"""Command-line interface.

Subcommands: train, analyze, evaluate, play, serve, perft. Exit codes:
0 success, 1 runtime failure, 2 bad usage or configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import board, nnet, plots, storage
from .config import DATA_DIR_ENV, RunConfig, load_config
from .encoding import move_table
from .evaluators import NetEvaluator
from .meta import (EloBin, GamescapeEmbedding, elo_win_probability,
                   exploitability_symmetric, gamescape_embedding, make_bins,
                   nash_clustering, build_payoff_from_records, rp_elo,
                   rps_cycles, spinning_top_profile)
from .nash import PayoffMatrix, solve_max_entropy_nash, solve_zero_sum
from .search import SearchConfig
from .selfplay import MctsAgent, play_game
from .storage import PopulationManifest

log = logging.getLogger("xqlab")


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", default="tiny", choices=["tiny", "full"],
                        help="configuration preset (default: tiny)")
    parser.add_argument("--config", default=None, help="TOML config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. --set search.simulations=64")
    parser.add_argument("--seed", type=int, default=None)


def _build_config(args) -> RunConfig:
    cfg = load_config(args.config, preset=args.preset, overrides=args.set)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _load_evaluator(checkpoint: str | None, cfg: RunConfig) -> NetEvaluator:
    table = move_table()
    if checkpoint in (None, "fresh"):
        net = nnet.new_net(table.size, cfg.model.filters, cfg.model.blocks,
                           seed=cfg.seed)
    else:
        with open(checkpoint, "rb") as fh:
            net, _ = nnet.deserialize_checkpoint(fh.read(), table.checksum())
    return NetEvaluator(nnet.NumpyNet.from_torch(net))


# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    from .train import Trainer, parallel_selfplay

    cfg = _build_config(args)
    run_dir = Path(args.out) if args.out else cfg.resolve_data_dir() / "train"
    trainer = Trainer(cfg, run_dir)
    if cfg.workers > 1 and args.games:
        parallel_selfplay(trainer, args.games, cfg.workers)
        trainer.train_steps(cfg.train.steps_per_game * args.games, 1.0)
        stats = trainer.stats
        trainer.save_step_checkpoint()
    else:
        stats = trainer.run(games=args.games, minutes=args.minutes,
                            max_steps=args.max_steps)
    print(f"trained: games={stats.games} steps={stats.steps} "
          f"rotations={stats.rotations} wall={stats.wall_seconds:.0f}s")
    if stats.last_loss:
        print(f"last loss: total={stats.last_loss.total:.4f} "
              f"value={stats.last_loss.value:.4f} policy={stats.last_loss.policy:.4f}")
    print(f"run directory: {run_dir}")
    return 0


def cmd_analyze(args) -> int:
    records = storage.read_records(args.records)
    elos = [e for r in records for e in (r.red_elo, r.black_elo) if e is not None]
    if not elos:
        print("error: records carry no Elo ratings", file=sys.stderr)
        return 1
    if args.bins:
        edges = [float(x) for x in args.bins.split(",")]
        bins = [EloBin(a, b) for a, b in zip(edges, edges[1:])]
    else:
        lo = (min(elos) // args.bin_width) * args.bin_width
        hi = max(elos) + args.bin_width
        bins = make_bins(lo, hi, args.bin_width)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    payoff = build_payoff_from_records(records, bins, mode=args.mode)
    storage.write_payoff(out / "payoff.csv", payoff)

    clustering = nash_clustering(payoff)
    storage.atomic_write_text(out / "clustering.json", json.dumps(
        {"clusters": clustering.clusters,
         "labels": payoff.labels}, indent=2))

    cycles = rps_cycles(payoff)
    storage.write_csv(out / "cycles.csv", ["label", "cycles_through"],
                      [(lbl, int(c)) for lbl, c in zip(payoff.labels, cycles.diag)])

    rows = spinning_top_profile(payoff, bins)
    storage.write_profile(out / "profile.csv", rows)

    nash = solve_max_entropy_nash(payoff)
    storage.write_csv(out / "nash.csv", ["label", "probability"],
                      [(lbl, repr(float(p))) for lbl, p in zip(payoff.labels, nash.p)])

    emitted = ["payoff.csv", "clustering.json", "cycles.csv", "profile.csv",
               "nash.csv"]
    if payoff.size >= 3:
        embedding = gamescape_embedding(payoff, z_cutoff=args.z_cutoff)
        storage.write_embedding(out / "embedding.csv", payoff.labels,
                                embedding.points)
        emitted.append("embedding.csv")
        if not args.no_figures:
            plots.embedding_plot(embedding, payoff.labels, out / "embedding.png")
            emitted.append("embedding.png")
    if not args.no_figures:
        plots.payoff_heatmap(payoff, out / "payoff.png")
        plots.profile_plot(rows, out / "profile.png")
        plots.nash_distribution_plot(nash.p, payoff.labels, out / "nash.png")
        emitted += ["payoff.png", "profile.png", "nash.png"]
    print(f"analyzed {len(records)} records into {len(bins)} bins")
    print(f"wrote {out}/: " + ", ".join(emitted))
    return 0


def _manifest_agents(manifest: PopulationManifest, cfg: RunConfig,
                     simulations: int) -> dict[str, MctsAgent]:
    table = move_table()
    agents = {}
    scfg = SearchConfig(simulations=simulations, c_puct=cfg.search.c_puct,
                        root_noise_fraction=0.0, temperature_cutoff_ply=0,
                        final_temperature=0.0,
                        max_game_plies=cfg.search.max_game_plies)
    for label in manifest.labels:
        with open(manifest.checkpoints[label], "rb") as fh:
            net, _ = nnet.deserialize_checkpoint(fh.read(), table.checksum())
        agents[label] = MctsAgent(NetEvaluator(nnet.NumpyNet.from_torch(net)),
                                  scfg, name=label)
    return agents


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    rng = np.random.default_rng(cfg.seed)

    if args.metric == "rpp":
        a = PopulationManifest.load(args.pop_a)
        b = PopulationManifest.load(args.pop_b)
        agents_a = _manifest_agents(a, cfg, args.simulations)
        agents_b = _manifest_agents(b, cfg, args.simulations)
        same = a.labels == b.labels and a.checkpoints == b.checkpoints
        if same:
            # Self-comparison: a single round-robin filled antisymmetrically.
            from .population import NashBuffer, fill_payoff
            buf = NashBuffer()
            labels = a.labels
            for i, la in enumerate(labels):
                for lb in labels[i + 1:]:
                    for g in range(args.games_per_pair):
                        red, black = (la, lb) if g % 2 == 0 else (lb, la)
                        out = play_game(agents_a[red], agents_a[black], rng,
                                        max_plies=cfg.search.max_game_plies)
                        buf.append(out.score_red, red, black)
            matrix = fill_payoff(buf, labels).matrix
        else:
            matrix = np.zeros((len(a.labels), len(b.labels)))
            for i, la in enumerate(a.labels):
                for j, lb in enumerate(b.labels):
                    total = 0.0
                    for g in range(args.games_per_pair):
                        if g % 2 == 0:
                            out = play_game(agents_a[la], agents_b[lb], rng,
                                            max_plies=cfg.search.max_game_plies)
                            total += out.score_red
                        else:
                            out = play_game(agents_b[lb], agents_a[la], rng,
                                            max_plies=cfg.search.max_game_plies)
                            total -= out.score_red
                    matrix[i, j] = total / args.games_per_pair
        p, q, value = solve_zero_sum(matrix)
        rpp_value = float(p @ matrix @ q)
        print(f"rpp(pop_a, pop_b) = {rpp_value:.6f}")
        if args.out:
            storage.atomic_write_text(args.out, json.dumps(
                {"rpp": rpp_value, "payoff": matrix.tolist(),
                 "p": p.tolist(), "q": q.tolist()}, indent=2))
        return 0

    if args.metric == "rp-elo":
        manifest = PopulationManifest.load(args.pop)
        agents = _manifest_agents(manifest, cfg, args.simulations)
        challenger_label = "challenger"
        cev = _load_evaluator(args.checkpoint, cfg)
        scfg = next(iter(agents.values())).cfg if agents else SearchConfig()
        agents[challenger_label] = MctsAgent(cev, scfg, name=challenger_label)

        def engine(red: str, black: str) -> int:
            return play_game(agents[red], agents[black], rng,
                             max_plies=cfg.search.max_game_plies).score_red

        ratings = rp_elo(manifest.labels, challenger_label, engine,
                         games_per_pair=args.games_per_pair,
                         k_factor=cfg.analysis.elo_k_factor)
        for label, rating in sorted(ratings.items(), key=lambda t: -t[1]):
            print(f"{label:24s} {rating:8.1f}")
        if args.out:
            storage.atomic_write_text(args.out, json.dumps(ratings, indent=2))
        return 0

    if args.metric == "exploitability":
        payoff = storage.read_payoff(args.payoff)
        if args.mixture:
            p = np.array([float(x) for x in args.mixture.split(",")])
            if len(p) != payoff.size or abs(p.sum() - 1.0) > 1e-9 or p.min() < 0:
                print("error: mixture must be a probability vector matching "
                      "the payoff size", file=sys.stderr)
                return 2
        elif args.uniform:
            p = np.full(payoff.size, 1.0 / payoff.size)
        else:
            p = solve_max_entropy_nash(payoff).p
        value = exploitability_symmetric(payoff.matrix, p)
        print(f"exploitability = {value:.6f} (exact best response on the matrix)")
        return 0

    print(f"unknown metric {args.metric}", file=sys.stderr)
    return 2


PIECE_GLYPHS = {1: "K", 2: "A", 3: "B", 4: "N", 5: "R", 6: "C", 7: "P"}


def render_board(p: board.Position) -> str:
    lines = []
    for rank in range(9, -1, -1):
        row = [f"{rank} "]
        for file in range(9):
            code = p.board[rank * 9 + file]
            if not code:
                row.append(" . ")
            else:
                glyph = PIECE_GLYPHS[board.piece_kind(code)]
                if board.piece_color(code) == board.BLACK:
                    glyph = glyph.lower()
                row.append(f" {glyph} ")
        lines.append("".join(row))
        if rank == 5:
            lines.append("  ~~~~~~~~~~~ river ~~~~~~~~~~~")
    lines.append("   " + "  ".join("abcdefghi"))
    return "\n".join(lines)


def cmd_play(args) -> int:
    cfg = _build_config(args)
    evaluator = _load_evaluator(args.checkpoint, cfg)
    scfg = SearchConfig(simulations=args.simulations, root_noise_fraction=0.0,
                        temperature_cutoff_ply=0, final_temperature=0.0,
                        max_game_plies=cfg.search.max_game_plies)
    agent = MctsAgent(evaluator, scfg)
    human = board.RED if args.color == "red" else board.BLACK
    p = board.initial_position()
    print(render_board(p))
    while True:
        result = board.terminal_result(p, max_plies=cfg.search.max_game_plies)
        if result is not None:
            outcome = {1: "red wins", 0: "draw", -1: "black wins"}[result.score_red]
            print(f"game over: {outcome}")
            return 0
        if p.side_to_move == human:
            text = input("your move (e.g. b0c2, or 'quit'): ").strip()
            if text in ("quit", "exit", "q"):
                return 0
            try:
                move = board.find_move(p, text)
            except (ValueError, board.IllegalMoveError) as exc:
                print(f"  {exc}")
                continue
            p = board.apply_move(p, move)
        else:
            from .search import search as run_search
            out = run_search(p, evaluator, scfg)
            move = out.top_k[0].move
            print(f"engine plays {move.text}  "
                  f"(value {out.value_estimate:+.2f}; candidates: "
                  + ", ".join(f"{c.move.text} N={c.n_parent} Q={c.q:+.2f} "
                              f"P={c.prior:.3f}" for c in out.top_k) + ")")
            p = board.apply_move(p, move)
        print(render_board(p))


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _build_config(args)
    evaluator = _load_evaluator(args.checkpoint, cfg)
    app = create_app(cfg, evaluator)
    host = args.host or cfg.service.host
    port = args.port or cfg.service.port
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def cmd_perft(args) -> int:
    p = board.parse_fen(args.fen)
    t0 = time.time()
    if args.per_move:
        total = 0
        for m in sorted(board.legal_moves(p), key=lambda m: m.text):
            n = board.perft(board.apply_move(p, m), args.depth - 1) \
                if args.depth > 1 else 1
            total += n
            print(f"{m.text}: {n}")
    else:
        total = board.perft(p, args.depth)
    print(f"perft({args.depth}) = {total}  ({time.time() - t0:.2f}s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xqlab",
        description="Xiangqi population training and meta-game analysis lab")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="self-play training with population rotation")
    _add_config_args(t)
    t.add_argument("--out", default=None, help="run directory")
    t.add_argument("--games", type=int, default=None)
    t.add_argument("--minutes", type=float, default=None)
    t.add_argument("--max-steps", type=int, default=None)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("analyze", help="non-transitivity analysis of game records")
    _add_config_args(a)
    a.add_argument("--records", required=True, help="JSONL game records")
    a.add_argument("--out-dir", default="analysis")
    a.add_argument("--bin-width", type=float, default=50.0)
    a.add_argument("--bins", default=None,
                   help="explicit bin edges, e.g. 1000,1100,1200")
    a.add_argument("--mode", default="midpoint", choices=["midpoint", "literal"])
    a.add_argument("--z-cutoff", type=float, default=2.5)
    a.add_argument("--no-figures", action="store_true")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("evaluate", help="population metrics")
    _add_config_args(e)
    e.add_argument("metric", choices=["rpp", "rp-elo", "exploitability"])
    e.add_argument("--pop-a", help="population manifest A (rpp)")
    e.add_argument("--pop-b", help="population manifest B (rpp)")
    e.add_argument("--pop", help="population manifest (rp-elo)")
    e.add_argument("--checkpoint", help="challenger checkpoint (rp-elo)")
    e.add_argument("--payoff", help="payoff CSV (exploitability)")
    e.add_argument("--mixture", help="comma-separated profile probabilities")
    e.add_argument("--uniform", action="store_true",
                   help="evaluate the uniform profile")
    e.add_argument("--games-per-pair", type=int, default=2)
    e.add_argument("--simulations", type=int, default=24)
    e.add_argument("--out", default=None, help="write JSON results here")
    e.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("play", help="terminal human-vs-agent game")
    _add_config_args(pl)
    pl.add_argument("--checkpoint", default=None,
                    help="checkpoint path, or 'fresh' for an untrained net")
    pl.add_argument("--color", default="red", choices=["red", "black"])
    pl.add_argument("--simulations", type=int, default=160)
    pl.set_defaults(func=cmd_play)

    s = sub.add_parser("serve", help="run the play/analysis HTTP service")
    _add_config_args(s)
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--host", default=None)
    s.add_argument("--port", type=int, default=None)
    s.set_defaults(func=cmd_serve)

    pf = sub.add_parser("perft", help="move-generator verification")
    pf.add_argument("--fen", default=board.INITIAL_FEN)
    pf.add_argument("--depth", type=int, default=1)
    pf.add_argument("--per-move", action="store_true")
    pf.set_defaults(func=cmd_perft)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
