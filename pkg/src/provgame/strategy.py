"""Strategy constructions: Opponent play driven by a countermodel,
the domain-growth world-selection variant, the saturation Proponent, and
the reconstruction of a countermodel from an Opponent win.

The model-driven Opponent keeps a pointer into a finite Kripke model and
an injection from the game's elements into the current world's domain.
On each turn he walks to a world falsifying something of Proponent's,
introduces the uninterpreted part of its domain as fresh elements, and
marks exactly the closure members true there; afterwards position truth
coincides with forcing at that world, so the turn passes.
"""
from __future__ import annotations

from typing import Iterable, Mapping

from .formula import (
    Atom, ClosureSet, Elem, Formula, canonical_key, constants_of,
    element_names, format_formula, map_terms, subformula_closure,
)
from .game import (
    GameError, GameTrace, Move, OpponentMove, Player, Position,
    ProponentMove, apply_move, to_move,
)
from .kripke import (
    KripkeModel, find_countermodel, forces, validate_model,
)
from .solver import SolveVerdict, fresh_names, surviving_moves

__all__ = [
    "StrategyError", "ExtractionError", "ScriptedStrategy", "delta_expander",
    "OpponentFromModel", "CasariOpponent", "casari_select_world",
    "SaturationProponent", "proponent_saturation_move", "extract_countermodel",
]


class StrategyError(GameError):
    pass


class ExtractionError(GameError):
    """Extraction postcondition failed; names the offending world/formula."""


# ---------------------------------------------------------------------------
# scripted strategies

class ScriptedStrategy:
    kind = "scripted"

    def __init__(self, moves: Iterable[Move | None]):
        self._moves = iter(moves)

    def next_move(self, position: Position) -> Move | None:
        return next(self._moves, None)


def delta_expander(prefix: str = "α") -> ScriptedStrategy:
    """Opponent who adds exactly one fresh element per turn and nothing else."""

    class _Expander(ScriptedStrategy):
        def __init__(self):
            pass

        def next_move(self, position: Position) -> Move:
            return OpponentMove(fresh=fresh_names(position.delta, 1, prefix))

    return _Expander()


# ---------------------------------------------------------------------------
# model-driven opponents

def _interp_formula(f: Formula, interp: Mapping[str, str]) -> Formula:
    return map_terms(
        f, lambda t, _d: Elem(interp[t.name])
        if isinstance(t, Elem) and t.name in interp else t)


class OpponentFromModel:
    """Opponent strategy from a model whose cone above `root` forces all of
    O but not all of P.  World choice: a maximal world falsifying some
    P-formula, lowest world id on ties."""

    kind = "opponent_from_model"

    def __init__(self, model: KripkeModel, root: str | None = None,
                 interpretation: Mapping[str, str] | None = None):
        bad = validate_model(model)
        if bad:
            raise StrategyError("invalid model: " + "; ".join(bad))
        if root is None:
            minimal = model.minimal_worlds()
            if len(minimal) != 1:
                raise StrategyError(
                    "model has no unique root; pass one explicitly")
            root = minimal[0]
        if root not in model.worlds:
            raise StrategyError(f"unknown root world {root!r}")
        self.model = model
        self.world = root
        self.interp: dict[str, str] = dict(
            interpretation if interpretation is not None
            else model.interpretation)

    def _ensure_interpreted(self, position: Position) -> None:
        dom = self.model.domain_set(self.world)
        image = set(self.interp.values())
        for e in position.delta:
            if e in self.interp:
                continue
            if e in dom and e not in image:
                self.interp[e] = e
                image.add(e)
            else:
                raise StrategyError(
                    f"element {e!r} has no interpretation in the domain "
                    f"of {self.world}")

    def _falsifying_worlds(self, position: Position) -> list[str]:
        p_model = [_interp_formula(f, self.interp) for f in position.p_set]
        return [
            v for v in self.model.above(self.world)
            if any(not forces(self.model, v, f) for f in p_model)
        ]

    def _choose_world(self, position: Position) -> str:
        falsifying = self._falsifying_worlds(position)
        maximal = [
            v for v in falsifying
            if not any(self.model.leq(v, u) and u != v for u in falsifying)
        ]
        return maximal[0]

    def next_move(self, position: Position) -> OpponentMove:
        self._ensure_interpreted(position)
        o_model = [_interp_formula(f, self.interp) for f in position.o_set]
        if any(not forces(self.model, self.world, f) for f in o_model):
            raise StrategyError(
                f"precondition broken: O is not forced at {self.world}")
        if not self._falsifying_worlds(position):
            raise StrategyError(
                "precondition broken: every P-formula is forced above "
                f"{self.world}")
        w = self._choose_world(position)
        image = set(self.interp.values())
        new_model_elems = [d for d in self.model.domain[w] if d not in image]
        fresh = fresh_names(position.delta, len(new_model_elems))
        for name, d in zip(fresh, new_model_elems):
            self.interp[name] = d
        closure = position.closure.with_delta(position.delta + fresh)
        into_o = frozenset(
            f for f in closure.members
            if f not in position.o_set
            and forces(self.model, w, _interp_formula(f, self.interp)))
        self.world = w
        return OpponentMove(fresh, into_o)


def opponent_next_move(state: OpponentFromModel, c: Position) -> OpponentMove:
    """Operation form of the model-driven Opponent's move computation."""
    return state.next_move(c)


def casari_select_world(m: KripkeModel, w0: str, p_set: Iterable[Formula],
                        closure: ClosureSet) -> str:
    """Walk upward from `w0`: prefer a world falsifying some P-formula with
    a strictly larger domain; otherwise one with the same domain whose
    truth differs on the closure of Gamma over that domain; stop when
    neither exists.  Above the result every world either forces all of P
    or agrees with it on domain and closure truth."""
    p_set = list(p_set)
    if all(forces(m, w0, f) for f in p_set):
        raise StrategyError(f"every P-formula is forced at {w0}")
    current = w0
    while True:
        ups = [v for v in m.above(current) if v != current]
        falsifying = [v for v in ups
                      if any(not forces(m, v, f) for f in p_set)]
        growing = [v for v in falsifying
                   if m.domain_set(current) < m.domain_set(v)]
        if growing:
            current = growing[0]
            continue
        local = subformula_closure(closure.gamma, m.domain[current])
        same_dom = [v for v in falsifying
                    if m.domain_set(v) == m.domain_set(current)]
        differing = [
            v for v in same_dom
            if any(forces(m, v, f) != forces(m, current, f)
                   for f in local.members)
        ]
        if differing:
            current = differing[0]
            continue
        return current


class CasariOpponent(OpponentFromModel):
    """Model-driven Opponent using the domain-growth world selection."""

    kind = "casari_policy"

    def _choose_world(self, position: Position) -> str:
        p_model = [_interp_formula(f, self.interp) for f in position.p_set]
        return casari_select_world(
            self.model, self.world, p_model, position.closure)


# ---------------------------------------------------------------------------
# saturation proponent

def proponent_saturation_move(c: Position, bounds: tuple[int, int], *,
                              cache: dict | None = None) -> ProponentMove:
    """Mark every unmarked closure member with no countermodel within
    `bounds` (current Delta elements act as constants).  An empty result
    is a losing no-op; the strategy wrapper turns it into resignation."""
    if to_move(c) is not Player.PROPONENT:
        raise StrategyError("not Proponent's turn")
    premises = sorted(c.o_set, key=canonical_key)
    add = set()
    for psi in c.closure.members:
        if psi in c.p_set:
            continue
        if cache is not None:
            key = _consequence_key(c, psi)
            verdict = cache.get(key)
            if verdict is None:
                verdict = find_countermodel(premises, psi, bounds) is None
                cache[key] = verdict
        else:
            verdict = find_countermodel(premises, psi, bounds) is None
        if verdict:
            add.add(psi)
    return ProponentMove(frozenset(add))


def _consequence_key(c: Position, psi: Formula) -> str:
    """Cache key for "psi follows from O": game elements renamed by first
    occurrence so symmetric queries share one search."""
    fixed = set(constants_of(c.gamma))
    order: list[str] = []
    for f in sorted(c.o_set, key=canonical_key) + [psi]:
        for name in sorted(element_names(f)):
            if name not in fixed and name not in order:
                order.append(name)
    mapping = {name: f"?e{i}" for i, name in enumerate(order)}
    rename = lambda f: format_formula(_rn(f, mapping))
    os = ";".join(sorted(rename(f) for f in c.o_set))
    return f"O[{os}]|{rename(psi)}"


def _rn(f: Formula, mapping: Mapping[str, str]) -> Formula:
    return map_terms(
        f, lambda t, _d: Elem(mapping[t.name])
        if isinstance(t, Elem) and t.name in mapping else t)


class SaturationProponent:
    kind = "proponent_saturation"

    def __init__(self, bounds: tuple[int, int] = (2, 2)):
        self.bounds = bounds
        self._cache: dict = {}

    def next_move(self, position: Position) -> ProponentMove | None:
        move = proponent_saturation_move(position, self.bounds,
                                         cache=self._cache)
        if not move.add:
            return None  # nothing sound to add: resign
        return move


# ---------------------------------------------------------------------------
# countermodel extraction

def _stage_of(position: Position) -> tuple[frozenset[Formula], tuple[str, ...]]:
    return (position.o_set, position.delta)


def _stages_from_trace(trace: GameTrace) -> list[tuple[frozenset[Formula], tuple[str, ...]]]:
    stages = [_stage_of(trace.start)]
    for step in trace.steps:
        stage = _stage_of(step.position)
        if stage != stages[-1]:
            stages.append(stage)
    return stages


def _stages_from_witness(trace: GameTrace, verdict: SolveVerdict,
                         limit: int = 20_000) -> list:
    """Stages over every play where Opponent follows the witness and
    Proponent tries each of his surviving replies."""
    if verdict.winner is not Player.OPPONENT:
        raise ExtractionError("witness does not belong to Opponent")
    stages = [_stage_of(trace.start)]
    seen_positions = set()
    budget = verdict.budget
    work = [(trace.start, budget)]
    visited = 0
    while work:
        pos, remaining = work.pop()
        marker = (pos.o_set, pos.p_set, pos.delta)
        if marker in seen_positions:
            continue
        seen_positions.add(marker)
        visited += 1
        if visited > limit:
            raise ExtractionError("witness tree too large to walk")
        mover = to_move(pos)
        if mover is Player.OPPONENT:
            move = verdict.witness.next_move(pos)
            if move is None:
                continue  # off-book: this line already lost for Proponent
            nxt = apply_move(pos, mover, move)
            stage = _stage_of(nxt)
            if stage not in stages:
                stages.append(stage)
            work.append((nxt, remaining - len(move.fresh)))
        else:
            for move in surviving_moves(pos):
                work.append((apply_move(pos, mover, move), remaining))
    return stages


def extract_countermodel(trace: GameTrace,
                         strategy_tree: SolveVerdict | None = None) -> KripkeModel:
    """Build a Kripke model from an Opponent win: one world per (O, Delta)
    stage reached by Opponent's turns, ordered by extension, with domains
    from Delta and atoms from O.  The result is re-checked by forcing
    before it is returned: all of the initial O is forced everywhere and
    the goal fails at the root."""
    if trace.outcome.winner is not Player.OPPONENT:
        raise ExtractionError("trace was not won by Opponent")
    if len(trace.start.p_set) != 1:
        raise ExtractionError("start position must carry exactly the goal")
    (phi,) = trace.start.p_set
    if strategy_tree is not None:
        stages = _stages_from_witness(trace, strategy_tree)
    else:
        stages = _stages_from_trace(trace)

    names = {id(stage): f"w{i}" for i, stage in enumerate(stages)}
    worlds = tuple(names[id(s)] for s in stages)
    order = set()
    for a in stages:
        for b in stages:
            if set(a[1]) <= set(b[1]) and a[0] <= b[0]:
                order.add((names[id(a)], names[id(b)]))
    domain = {names[id(s)]: s[1] for s in stages}
    atoms = {
        names[id(s)]: frozenset(f for f in s[0] if isinstance(f, Atom))
        for s in stages
    }
    root = names[id(stages[0])]
    model = KripkeModel(
        worlds=worlds,
        order=frozenset(order),
        domain=domain,
        atoms=atoms,
        interpretation={e: e for e in trace.start.delta},
        allow_empty_domains=any(not s[1] for s in stages),
    )
    bad = validate_model(model)
    if bad:
        raise ExtractionError("extracted model invalid: " + "; ".join(bad))
    for w in model.worlds:
        for f in trace.start.o_set:
            if not forces(model, w, f):
                raise ExtractionError(
                    f"premise {format_formula(f)} not forced at {w}")
    if forces(model, root, phi):
        raise ExtractionError(
            f"goal {format_formula(phi)} is forced at the root {root}")
    return model
