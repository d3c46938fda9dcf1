"""HTTP session service: a human plays one side against an engine
strategy, over a wire API that mirrors the game state field for field.

Endpoints (JSON bodies):
  POST /sessions                create; engine replies immediately if due
  GET  /sessions/{id}           full view: closure marks, truths, mistakes
  POST /sessions/{id}/moves     submit the human move
  GET  /sessions/{id}/trace     trace document (finished or in progress)

The server is the single rule authority: every submitted move goes
through the same legality checks as the referee, and an illegal move is
rejected with the specific violation, leaving the session unchanged.
"""
from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .formula import (
    FormulaError, Signature, format_formula, parse_formula, parse_inferred,
)
from .game import (
    GameError, GameTrace, IllegalMoveError, Move, OpponentMove, Outcome,
    Player, Position, ProponentMove, Reason, Step, apply_move,
    initial_position, mistakes, position_truth, save_trace, to_move,
)
from .kripke import ModelError, load_model
from .solver import fresh_names, solve_game
from .strategy import (
    OpponentFromModel, SaturationProponent, ScriptedStrategy, delta_expander,
)


class SessionError(GameError):
    pass


@dataclass
class Session:
    id: str
    sig: Signature
    human_side: Player
    engine_name: str
    engine: Any
    start: Position
    position: Position
    steps: list[Step] = field(default_factory=list)
    outcome: Outcome | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def status(self) -> str:
        if self.outcome is not None:
            return "finished"
        if to_move(self.position) == self.human_side:
            return "awaiting_human"
        return "awaiting_engine"


# ---------------------------------------------------------------------------
# engine construction

def build_engine(name: str, params: dict, start: Position):
    if name == "saturation":
        bounds = (int(params.get("worlds", 2)), int(params.get("dom", 2)))
        return SaturationProponent(bounds)
    if name == "delta-expander":
        return delta_expander()
    if name == "from-model":
        model = load_model(params["model"])
        return OpponentFromModel(model, params.get("root"))
    if name == "scripted":
        moves = _parse_script(params.get("moves", ()), params["side"], start)
        return ScriptedStrategy(moves)
    if name == "solver":
        budget = int(params.get("budget", 1))
        verdict = solve_game(
            start, budget,
            node_limit=int(params.get("nodes", 500_000)),
            subset_ceiling=int(params.get("ceiling", 14)))
        if verdict.winner.value == params["side"]:
            return verdict.witness
        return ScriptedStrategy([])
    raise SessionError(f"unknown engine strategy {name!r}")


def _parse_script(records, side: str, start: Position) -> list[Move]:
    sig_texts = sorted(format_formula(f) for f in start.gamma)
    _fs, sig = parse_inferred(sig_texts)
    known = list(start.delta)
    moves: list[Move] = []
    for rec in records:
        fresh = tuple(rec.get("fresh", ()))
        known.extend(fresh)
        add = frozenset(parse_formula(t, sig, extra_elements=known)
                        for t in rec.get("add", ()))
        if side == Player.OPPONENT.value:
            moves.append(OpponentMove(fresh, add))
        else:
            moves.append(ProponentMove(add))
    return moves


# ---------------------------------------------------------------------------
# views

def session_view(s: Session) -> dict:
    pos = s.position
    o_bad, p_bad = mistakes(pos)
    closure = []
    for f in pos.closure.members:
        if f in pos.o_set:
            mark = "o"
        elif f in pos.p_set:
            mark = "p"
        else:
            mark = "unmarked"
        truth = position_truth(pos, f)
        closure.append({
            "formula": format_formula(f),
            "mark": mark,
            "truth": truth,
            "mistake": (f in o_bad) or (f in p_bad),
        })
    history = []
    for step in s.steps:
        history.append({
            "mover": step.mover.value,
            "fresh": list(step.move.fresh)
            if isinstance(step.move, OpponentMove) else [],
            "added": sorted(format_formula(f) for f in step.move.add),
        })
    return {
        "id": s.id,
        "status": s.status,
        "human_side": s.human_side.value,
        "engine": s.engine_name,
        "to_move": to_move(pos).value,
        "gamma": sorted(format_formula(f) for f in pos.gamma),
        "delta": list(pos.delta),
        "o": sorted(format_formula(f) for f in pos.o_set),
        "p": sorted(format_formula(f) for f in pos.p_set),
        "closure": closure,
        "mistakes": {
            "opponent": sorted(format_formula(f) for f in o_bad),
            "proponent": sorted(format_formula(f) for f in p_bad),
        },
        "history": history,
        "outcome": None if s.outcome is None else {
            "winner": s.outcome.winner.value,
            "reason": s.outcome.reason.value,
        },
    }


def trace_document(s: Session) -> str:
    if s.outcome is not None:
        return save_trace(GameTrace(s.start, tuple(s.steps), s.outcome))
    # in-progress: same document shape with a null outcome
    stub = GameTrace(s.start, tuple(s.steps),
                     Outcome(Player.PROPONENT, Reason.CUTOFF))
    doc = json.loads(save_trace(stub))
    doc["outcome"] = None
    return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# session store and rules plumbing

class SessionStore:
    def __init__(self, persist_dir: str | None = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.persist_dir = Path(persist_dir) if persist_dir else None

    def add(self, s: Session) -> None:
        with self._lock:
            self._sessions[s.id] = s

    def get(self, session_id: str) -> Session:
        with self._lock:
            s = self._sessions.get(session_id)
        if s is None:
            raise SessionError(f"unknown session {session_id!r}")
        return s

    def persist(self, s: Session) -> None:
        """One trace file per session, rewritten as the game grows."""
        if self.persist_dir:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
            (self.persist_dir / f"{s.id}.trace").write_text(trace_document(s))


def _check_loss_rule(s: Session, mover: Player) -> None:
    if to_move(s.position) == mover:
        s.outcome = Outcome(mover.other, Reason.STUCK)


def _engine_reply(s: Session) -> None:
    """One engine move (at most one is ever due thanks to the loss rule)."""
    if s.outcome is not None:
        return
    engine_side = s.human_side.other
    if to_move(s.position) != engine_side:
        return
    move = s.engine.next_move(s.position)
    if move is None:
        s.outcome = Outcome(engine_side.other, Reason.RESIGN)
        return
    try:
        nxt = apply_move(s.position, engine_side, move)
    except IllegalMoveError:
        s.outcome = Outcome(engine_side.other, Reason.RESIGN)
        return
    s.steps.append(Step(engine_side, move, nxt))
    s.position = nxt
    _check_loss_rule(s, engine_side)


# ---------------------------------------------------------------------------
# wire schemas

class CreateRequest(BaseModel):
    o0: list[str] = Field(default_factory=list)
    phi: str
    human_side: str = "opponent"
    engine: dict = Field(default_factory=dict)


class MoveRequest(BaseModel):
    fresh_count: int = 0
    add: list[str] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# app

def default_ui_dir() -> Path | None:
    """The bundled browser client, when running from a source checkout."""
    candidate = Path(__file__).resolve().parents[2] / "frontend"
    if (candidate / "index.html").exists():
        return candidate
    return None


def create_app(persist_dir: str | None = None,
               ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="provgame session service")
    store = SessionStore(persist_dir)

    @app.exception_handler(SessionError)
    async def _session_error(_req, exc: SessionError):
        status = 404 if "unknown session" in str(exc) else 400
        return JSONResponse({"error": str(exc)}, status_code=status)

    @app.post("/sessions")
    def create_session(req: CreateRequest):
        try:
            human = Player(req.human_side)
        except ValueError:
            raise SessionError(f"unknown side {req.human_side!r}")
        try:
            formulas, sig = parse_inferred(list(req.o0) + [req.phi])
        except FormulaError as e:
            raise SessionError(f"cannot parse formulas: {e}")
        start = initial_position(formulas[:-1], formulas[-1])
        engine_params = dict(req.engine)
        engine_name = engine_params.pop("name", "saturation")
        engine_params.setdefault("side", human.other.value)
        try:
            engine = build_engine(engine_name, engine_params, start)
        except (KeyError, ModelError, GameError, ValueError) as e:
            raise SessionError(f"cannot build engine: {e}")
        s = Session(
            id=uuid.uuid4().hex[:12],
            sig=sig,
            human_side=human,
            engine_name=engine_name,
            engine=engine,
            start=start,
            position=start,
        )
        with s.lock:
            _engine_reply(s)
            store.add(s)
            store.persist(s)
            return session_view(s)

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        return session_view(store.get(session_id))

    @app.post("/sessions/{session_id}/moves")
    def submit_move(session_id: str, req: MoveRequest):
        s = store.get(session_id)
        with s.lock:
            if s.status != "awaiting_human":
                raise SessionError(
                    f"session is {s.status}, not awaiting a human move")
            fresh = ()
            if s.human_side is Player.OPPONENT:
                fresh = fresh_names(s.position.delta, req.fresh_count)
            elif req.fresh_count:
                raise SessionError(
                    "proponent may neither extend Delta nor touch O")
            known = list(s.position.delta) + list(fresh)
            try:
                add = frozenset(
                    parse_formula(t, s.sig, extra_elements=known)
                    for t in req.add)
            except FormulaError as e:
                raise SessionError(f"cannot parse move: {e}")
            move: Move
            if s.human_side is Player.OPPONENT:
                move = OpponentMove(fresh, add)
            else:
                move = ProponentMove(add)
            try:
                nxt = apply_move(s.position, s.human_side, move)
            except IllegalMoveError as e:
                raise SessionError(str(e))
            s.steps.append(Step(s.human_side, move, nxt))
            s.position = nxt
            _check_loss_rule(s, s.human_side)
            _engine_reply(s)
            store.persist(s)
            return session_view(s)

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        s = store.get(session_id)
        with s.lock:
            return PlainTextResponse(trace_document(s),
                                     media_type="application/json")

    ui = Path(ui_dir) if ui_dir else default_ui_dir()
    if ui is not None and (ui / "index.html").exists():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")

    return app
