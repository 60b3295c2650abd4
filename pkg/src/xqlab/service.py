"""Play/analysis HTTP service.

Sessions live in an in-memory store with TTL eviction; everything else is
stateless, so restarting the service and replaying a session's move list
reproduces the same positions and the same engine replies (the engine
searches without noise and breaks ties by action index).
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import board
from .board import BLACK, RED, IllegalMoveError, Position
from .config import RunConfig
from .search import SearchConfig, search
from .selfplay import MctsAgent


class NewGameRequest(BaseModel):
    human_color: str = Field(default="red", pattern="^(red|black)$")
    simulations: Optional[int] = Field(default=None, ge=1, le=10_000)


class MoveRequest(BaseModel):
    move: str = Field(min_length=4, max_length=4)


@dataclass
class GameSession:
    session_id: str
    position: Position
    human_color: int
    simulations: int
    history: list[str] = field(default_factory=list)
    analysis_cache: dict[int, dict] = field(default_factory=dict)
    last_access: float = field(default_factory=time.monotonic)


class SessionStore:
    def __init__(self, ttl_seconds: float):
        self.ttl = ttl_seconds
        self._sessions: dict[str, GameSession] = {}

    def sweep(self) -> None:
        now = time.monotonic()
        dead = [sid for sid, s in self._sessions.items()
                if now - s.last_access > self.ttl]
        for sid in dead:
            del self._sessions[sid]

    def put(self, session: GameSession) -> None:
        self.sweep()
        self._sessions[session.session_id] = session

    def get(self, session_id: str) -> GameSession:
        self.sweep()
        session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        session.last_access = time.monotonic()
        return session


def _status(p: Position, max_plies: int) -> str:
    result = board.terminal_result(p, max_plies=max_plies)
    if result is None:
        return "ongoing"
    if result.score_red > 0:
        return "red_won"
    if result.score_red < 0:
        return "black_won"
    return "draw"


def create_app(cfg: RunConfig, evaluator) -> FastAPI:
    """Build the service around a frozen evaluator (a loaded checkpoint)."""
    app = FastAPI(title="xqlab play service")
    store = SessionStore(cfg.service.session_ttl_seconds)
    app.state.sessions = store
    max_plies = cfg.search.max_game_plies

    def agent_for(session: GameSession) -> MctsAgent:
        scfg = replace(cfg.search, simulations=session.simulations,
                       root_noise_fraction=0.0, temperature_cutoff_ply=0,
                       final_temperature=0.0)
        return MctsAgent(evaluator, scfg, name="engine")

    def engine_reply(session: GameSession) -> Optional[str]:
        if _status(session.position, max_plies) != "ongoing":
            return None
        move, _ = agent_for(session).choose(session.position, rng=None, greedy=True)
        session.position = board.apply_move(session.position, move)
        session.history.append(move.text)
        return move.text

    def state_payload(session: GameSession, agent_move: Optional[str] = None) -> dict:
        p = session.position
        payload = {
            "session_id": session.session_id,
            "fen": board.format_fen(p),
            "status": _status(p, max_plies),
            "history": list(session.history),
            "human_color": "red" if session.human_color == RED else "black",
            "legal_moves": sorted(m.text for m in board.legal_moves(p)),
            "agent_move": agent_move,
        }
        return payload

    def fresh_session(session: GameSession) -> dict:
        session.position = board.initial_position()
        session.history = []
        session.analysis_cache = {}
        agent_move = None
        if session.human_color == BLACK:
            agent_move = engine_reply(session)
        return state_payload(session, agent_move)

    @app.post("/games", status_code=201)
    def new_game(req: NewGameRequest) -> dict:
        session = GameSession(
            session_id=uuid.uuid4().hex,
            position=board.initial_position(),
            human_color=RED if req.human_color == "red" else BLACK,
            simulations=req.simulations or cfg.service.default_simulations,
        )
        store.put(session)
        return fresh_session(session)

    @app.get("/games/{session_id}")
    def get_game(session_id: str) -> dict:
        return state_payload(store.get(session_id))

    @app.post("/games/{session_id}/moves")
    def play_move(session_id: str, req: MoveRequest) -> dict:
        session = store.get(session_id)
        if _status(session.position, max_plies) != "ongoing":
            raise HTTPException(status_code=409, detail="game is over")
        if session.position.side_to_move != session.human_color:
            raise HTTPException(status_code=409, detail="not the human's turn")
        try:
            move = board.find_move(session.position, req.move)
        except (IllegalMoveError, ValueError):
            raise HTTPException(status_code=422, detail={
                "message": f"illegal move {req.move!r}",
                "legal_moves": sorted(m.text for m in
                                      board.legal_moves(session.position)),
            })
        session.position = board.apply_move(session.position, move)
        session.history.append(move.text)
        agent_move = engine_reply(session)
        return state_payload(session, agent_move)

    @app.get("/games/{session_id}/analysis")
    def analysis(session_id: str) -> dict:
        session = store.get(session_id)
        p = session.position
        if _status(p, max_plies) != "ongoing":
            raise HTTPException(status_code=409, detail="game is over")
        cached = session.analysis_cache.get(p.key)
        if cached is not None:
            return cached
        out = search(p, agent_for(session).evaluator,
                     agent_for(session).cfg, rng=None)
        payload = {
            "win_probability": out.value_estimate,
            "candidates": [
                {"move": c.move.text, "n": c.n_parent, "q": c.q, "p": c.prior}
                for c in out.top_k
            ],
        }
        session.analysis_cache[p.key] = payload
        return payload

    @app.post("/games/{session_id}/restart")
    def restart(session_id: str) -> dict:
        return fresh_session(store.get(session_id))

    return app
