"""Game positions, the position truth relation, move legality and the
referee loop.

A position is (O, P, Delta) over a fixed premise set Gamma; O and P are
subsets of the instantiated-subformula closure of Gamma over Delta.  Only
marked formulas (members of O u P) can be true: atoms are true exactly
when they are in O, compounds evaluate their top connective classically
over the recursive truth of their children, and quantifiers range over
Delta.  A player whose set contains a false formula has a mistake; the
mistake-free player is the one who must move, and a player who must move
twice in a row loses.  Infinite play favours the second player, which a
finite referee approximates with a move cutoff.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Protocol

from .formula import (
    And, Atom, Bottom, ClosureSet, Elem, Exists, Forall, Formula, Impl, Or,
    Signature, canonical_key, constants_of, format_formula, is_closed,
    node_count, open_binder, parse_formula, subformula_closure,
)


class GameError(ValueError):
    pass


class IllegalMoveError(GameError):
    """A move violating the rules; the message names the violation."""


class TraceError(GameError):
    pass


class Player(str, Enum):
    OPPONENT = "opponent"
    PROPONENT = "proponent"

    @property
    def other(self) -> "Player":
        return Player.PROPONENT if self is Player.OPPONENT else Player.OPPONENT


class Reason(str, Enum):
    STUCK = "stuck_after_own_move"
    RESIGN = "illegal_or_resign"
    CUTOFF = "cutoff_presumed_infinite"


# ---------------------------------------------------------------------------
# moves and positions

@dataclass(frozen=True)
class OpponentMove:
    fresh: tuple[str, ...] = ()
    add: frozenset[Formula] = frozenset()


@dataclass(frozen=True)
class ProponentMove:
    add: frozenset[Formula] = frozenset()


Move = OpponentMove | ProponentMove


@dataclass(frozen=True)
class Position:
    gamma: frozenset[Formula]
    delta: tuple[str, ...]
    o_set: frozenset[Formula]
    p_set: frozenset[Formula]
    closure: ClosureSet = field(compare=False, repr=False)

    def game_elements(self) -> tuple[str, ...]:
        """Delta entries introduced during play (not constants of Gamma)."""
        base = set(constants_of(self.gamma))
        return tuple(e for e in self.delta if e not in base)


def initial_position(o0: Iterable[Formula], phi: Formula) -> Position:
    """Gamma = o0 u {phi}; Delta = exactly the constants occurring in
    Gamma; O = o0 and P = {phi}."""
    o0 = frozenset(o0)
    for f in list(o0) + [phi]:
        if not is_closed(f):
            raise GameError(f"open formula: {f}")
    gamma = o0 | {phi}
    delta = constants_of(gamma)
    closure = subformula_closure(gamma, delta)
    return Position(gamma, delta, o0, frozenset({phi}), closure)


# ---------------------------------------------------------------------------
# truth

class ClosureEvaluator:
    """Index-based truth evaluation over one closure: members are sorted
    children-before-parents so a single pass computes every truth value."""

    def __init__(self, closure: ClosureSet):
        self.closure = closure
        self.members = tuple(
            sorted(closure.members, key=lambda f: (node_count(f), canonical_key(f))))
        self.index = {f: i for i, f in enumerate(self.members)}
        delta = closure.delta
        ops: list[tuple] = []
        for f in self.members:
            if isinstance(f, Bottom):
                ops.append(("bot",))
            elif isinstance(f, Atom):
                ops.append(("atom",))
            elif isinstance(f, Impl):
                ops.append(("impl", self.index[f.left], self.index[f.right]))
            elif isinstance(f, And):
                ops.append(("and", self.index[f.left], self.index[f.right]))
            elif isinstance(f, Or):
                ops.append(("or", self.index[f.left], self.index[f.right]))
            elif isinstance(f, Forall):
                insts = tuple(self.index[open_binder(f.body, Elem(e))]
                              for e in delta)
                ops.append(("all", insts))
            elif isinstance(f, Exists):
                insts = tuple(self.index[open_binder(f.body, Elem(e))]
                              for e in delta)
                ops.append(("any", insts))
            else:
                raise TypeError(f"not a formula: {f!r}")
        self.ops = tuple(ops)

    def truth(self, o_mask: int, p_mask: int) -> list[bool]:
        t = [False] * len(self.ops)
        marked = o_mask | p_mask
        for i, op in enumerate(self.ops):
            kind = op[0]
            if kind == "atom":
                t[i] = bool(o_mask >> i & 1)
                continue
            if kind == "bot" or not marked >> i & 1:
                continue
            if kind == "impl":
                t[i] = (not t[op[1]]) or t[op[2]]
            elif kind == "and":
                t[i] = t[op[1]] and t[op[2]]
            elif kind == "or":
                t[i] = t[op[1]] or t[op[2]]
            elif kind == "all":
                t[i] = all(t[j] for j in op[1])
            else:
                t[i] = any(t[j] for j in op[1])
        return t

    def to_mask(self, formulas: Iterable[Formula]) -> int:
        mask = 0
        for f in formulas:
            mask |= 1 << self.index[f]
        return mask

    def mask_formulas(self, mask: int) -> frozenset[Formula]:
        out = []
        while mask:
            low = mask & -mask
            out.append(self.members[low.bit_length() - 1])
            mask ^= low
        return frozenset(out)


@lru_cache(maxsize=256)
def get_evaluator(closure: ClosureSet) -> ClosureEvaluator:
    return ClosureEvaluator(closure)


def _truth_map(c: Position) -> dict[Formula, bool]:
    ev = get_evaluator(c.closure)
    t = ev.truth(ev.to_mask(c.o_set), ev.to_mask(c.p_set))
    return {f: t[i] for f, i in ev.index.items()}


def position_truth(c: Position, f: Formula) -> bool:
    if f not in c.closure:
        raise GameError(f"formula outside closure: {format_formula(f)}")
    return _truth_map(c)[f]


def mistakes(c: Position) -> tuple[frozenset[Formula], frozenset[Formula]]:
    """(Opponent's mistakes, Proponent's mistakes): the false members of
    each player's set."""
    t = _truth_map(c)
    return (frozenset(f for f in c.o_set if not t[f]),
            frozenset(f for f in c.p_set if not t[f]))


def to_move(c: Position) -> Player:
    o_bad, p_bad = mistakes(c)
    if not o_bad and p_bad:
        return Player.PROPONENT
    return Player.OPPONENT


# ---------------------------------------------------------------------------
# moves

def apply_move(c: Position, mover: Player, m: Move) -> Position:
    """Extend the position by a move; Gamma never changes and Delta, O, P
    only grow."""
    expected = to_move(c)
    if mover != expected:
        raise IllegalMoveError(f"it is {expected.value}'s turn, not {mover.value}'s")
    if mover is Player.OPPONENT:
        if not isinstance(m, OpponentMove):
            raise IllegalMoveError("opponent must submit an opponent move")
        seen = set(c.delta)
        for name in m.fresh:
            if not name:
                raise IllegalMoveError("fresh element names must be nonempty")
            if name in seen:
                raise IllegalMoveError(f"element name already in use: {name}")
            seen.add(name)
        delta = c.delta + tuple(m.fresh)
        closure = c.closure.with_delta(delta)
        for f in m.add:
            if f not in closure:
                raise IllegalMoveError(
                    f"formula outside closure: {format_formula(f)}")
        return Position(c.gamma, delta, c.o_set | m.add, c.p_set, closure)
    if not isinstance(m, ProponentMove):
        raise IllegalMoveError(
            "proponent may neither extend Delta nor touch O")
    for f in m.add:
        if f not in c.closure:
            raise IllegalMoveError(
                f"formula outside closure: {format_formula(f)}")
    return Position(c.gamma, c.delta, c.o_set, c.p_set | m.add, c.closure)


# ---------------------------------------------------------------------------
# referee

class Strategy(Protocol):
    kind: str

    def next_move(self, position: Position) -> Move | None:
        """The move to play, or None to resign."""


@dataclass(frozen=True)
class Outcome:
    winner: Player
    reason: Reason


@dataclass(frozen=True)
class Step:
    mover: Player
    move: Move
    position: Position


@dataclass(frozen=True)
class GameTrace:
    start: Position
    steps: tuple[Step, ...]
    outcome: Outcome


def run_game(start: Position, strat_o: Strategy, strat_p: Strategy,
             round_cutoff: int = 64) -> GameTrace:
    """Alternate moves under the turn rule until a player is stuck after
    his own move, resigns/misplays, or `round_cutoff` moves elapse (which
    counts as the infinite-play win for Proponent)."""
    if round_cutoff < 1:
        raise GameError("round_cutoff must be positive")
    steps: list[Step] = []
    pos = start
    while True:
        if len(steps) >= round_cutoff:
            outcome = Outcome(Player.PROPONENT, Reason.CUTOFF)
            break
        mover = to_move(pos)
        strat = strat_o if mover is Player.OPPONENT else strat_p
        move = strat.next_move(pos)
        if move is None:
            outcome = Outcome(mover.other, Reason.RESIGN)
            break
        try:
            nxt = apply_move(pos, mover, move)
        except IllegalMoveError:
            outcome = Outcome(mover.other, Reason.RESIGN)
            break
        steps.append(Step(mover, move, nxt))
        if to_move(nxt) == mover:
            outcome = Outcome(mover.other, Reason.STUCK)
            pos = nxt
            break
        pos = nxt
    return GameTrace(start, tuple(steps), outcome)


def replay_trace(trace: GameTrace) -> Outcome:
    """Recompute the outcome by replaying every step through apply_move;
    raises TraceError on any inconsistency."""
    pos = trace.start
    for i, step in enumerate(trace.steps):
        if to_move(pos) != step.mover:
            raise TraceError(f"step {i}: wrong mover recorded")
        try:
            pos = apply_move(pos, step.mover, step.move)
        except IllegalMoveError as e:
            raise TraceError(f"step {i}: illegal move: {e}") from None
        if pos != step.position:
            raise TraceError(f"step {i}: resulting position differs")
    out = trace.outcome
    if out.reason == Reason.STUCK:
        if not trace.steps or to_move(pos) != trace.steps[-1].mover \
                or out.winner != trace.steps[-1].mover.other:
            raise TraceError("stuck outcome does not match final position")
    elif out.reason == Reason.CUTOFF and out.winner != Player.PROPONENT:
        raise TraceError("cutoff can only be awarded to Proponent")
    return out


# ---------------------------------------------------------------------------
# trace files

def _fmt_set(fs: Iterable[Formula]) -> list[str]:
    return [format_formula(f) for f in sorted(fs, key=canonical_key)]


def save_trace(trace: GameTrace) -> str:
    preds: dict[str, int] = {}

    def collect(f: Formula) -> None:
        if isinstance(f, Atom):
            preds.setdefault(f.pred, len(f.args))
        elif isinstance(f, (Impl, And, Or)):
            collect(f.left)
            collect(f.right)
        elif isinstance(f, (Forall, Exists)):
            collect(f.body)

    for f in trace.start.gamma:
        collect(f)
    start = trace.start
    doc = {
        "signature": {
            "predicates": dict(sorted(preds.items())),
            "constants": list(constants_of(start.gamma)),
        },
        "start": {
            "gamma": _fmt_set(start.gamma),
            "delta": list(start.delta),
            "o": _fmt_set(start.o_set),
            "p": _fmt_set(start.p_set),
        },
        "steps": [
            {
                "mover": step.mover.value,
                "fresh": list(step.move.fresh)
                if isinstance(step.move, OpponentMove) else [],
                "added": _fmt_set(step.move.add),
            }
            for step in trace.steps
        ],
        "outcome": {
            "winner": trace.outcome.winner.value,
            "reason": trace.outcome.reason.value,
        },
    }
    return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def load_trace(text: str) -> GameTrace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TraceError(f"cannot read trace: {e}") from None
    try:
        sig = Signature(doc["signature"]["predicates"],
                        tuple(doc["signature"]["constants"]))
        all_elements = list(doc["start"]["delta"])
        for step in doc["steps"]:
            all_elements.extend(step.get("fresh", ()))

        def parse(text_form: str) -> Formula:
            return parse_formula(text_form, sig, extra_elements=all_elements)

        gamma = frozenset(parse(t) for t in doc["start"]["gamma"])
        delta = tuple(doc["start"]["delta"])
        closure = subformula_closure(gamma, delta)
        o_set = frozenset(parse(t) for t in doc["start"]["o"])
        p_set = frozenset(parse(t) for t in doc["start"]["p"])
        pos = Position(gamma, delta, o_set, p_set, closure)
        if not (o_set | p_set) <= closure.members_set:
            raise TraceError("start sets leave the closure")
        steps = []
        for rec in doc["steps"]:
            mover = Player(rec["mover"])
            added = frozenset(parse(t) for t in rec["added"])
            move: Move
            if mover is Player.OPPONENT:
                move = OpponentMove(tuple(rec.get("fresh", ())), added)
            else:
                if rec.get("fresh"):
                    raise TraceError("proponent steps cannot introduce elements")
                move = ProponentMove(added)
            pos = apply_move(pos, mover, move)
            steps.append(Step(mover, move, pos))
        outcome = Outcome(Player(doc["outcome"]["winner"]),
                          Reason(doc["outcome"]["reason"]))
    except (KeyError, ValueError) as e:
        if isinstance(e, TraceError):
            raise
        raise TraceError(f"malformed trace: {e}") from None
    start = Position(gamma, delta, o_set, p_set, closure)
    return GameTrace(start, tuple(steps), outcome)
