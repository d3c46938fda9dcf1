"""Exact solving of the budget-restricted game by backward induction.

The restriction: Opponent may introduce at most `budget` fresh elements in
total.  Every legal move that does not lose on the spot strictly enlarges
(O, P, Delta) inside a finite lattice, so minimax terminates.  Positions
are memoized under a canonical key that renames game-introduced elements,
collapsing symmetric lines.

Move generation never enumerates moves that lose immediately (a move
after which it is still the mover's turn loses by the repeat rule), so a
player's options here are exactly his "surviving" moves: for Opponent,
additions keeping his own set true while leaving Proponent a mistake; for
Proponent, additions that clear all of his mistakes or falsify something
of Opponent's.  If a player has no surviving move, he has lost.

Member sets are integer bitmasks over the closure's member index, which
keeps child generation and memoization cheap.
"""
from __future__ import annotations

import json
from itertools import combinations, permutations
from typing import Iterator, Mapping, Sequence

from .formula import (
    Elem, Formula, constants_of, format_formula, map_terms,
)
from .game import (
    ClosureEvaluator, GameError, Move, OpponentMove, Player, Position,
    ProponentMove, get_evaluator, to_move,
)


class SolverError(GameError):
    pass


class SolverInconclusiveError(SolverError):
    """Node limit or enumeration ceiling hit: no verdict either way."""

    def __init__(self, message: str, explored: int = 0):
        super().__init__(message)
        self.explored = explored


DEFAULT_SUBSET_CEILING = 14
DEFAULT_NODE_LIMIT = 500_000


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# ---------------------------------------------------------------------------
# canonical position keys

def fresh_names(delta: Sequence[str], count: int, prefix: str = "α") -> tuple[str, ...]:
    """`count` element names not clashing with `delta`, in naming order."""
    used = set(delta)
    out: list[str] = []
    i = 1
    while len(out) < count:
        name = f"{prefix}{i}"
        if name not in used:
            used.add(name)
            out.append(name)
        i += 1
    return tuple(out)


def _canonical_base(c: Position) -> str:
    """Prefix for canonical element names, guaranteed not to collide with
    the fixed (non-renameable) names of the game."""
    fixed = set(constants_of(c.gamma))
    base = "α"
    while any(name.startswith(base) for name in fixed):
        base += "α"
    return base


def _rename(f: Formula, mapping: Mapping[str, str]) -> Formula:
    if not mapping:
        return f
    return map_terms(
        f, lambda t, _d: Elem(mapping[t.name])
        if isinstance(t, Elem) and t.name in mapping else t)


def canonicalize_position(c: Position) -> tuple[str, dict[str, str]]:
    """A key shared by positions that differ only in the names of
    game-introduced elements, plus the renaming used.  Elements are
    renamed by trying every assignment of canonical names (small counts)
    and keeping the least serialization, so symmetric names collapse."""
    renameable = c.game_elements()
    g = len(renameable)
    base = _canonical_base(c)
    fixed_delta = tuple(e for e in c.delta if e not in set(renameable))
    gamma_part = ";".join(sorted(format_formula(f) for f in c.gamma))

    def serialize(mapping: dict[str, str]) -> str:
        o = ";".join(sorted(format_formula(_rename(f, mapping))
                            for f in c.o_set))
        p = ";".join(sorted(format_formula(_rename(f, mapping))
                            for f in c.p_set))
        return (f"G[{gamma_part}]D[{','.join(fixed_delta)}]g{g}"
                f"O[{o}]P[{p}]")

    if g == 0:
        return serialize({}), {}
    if g <= 6:
        best: str | None = None
        best_map: dict[str, str] = {}
        for perm in permutations(range(g)):
            mapping = {renameable[i]: f"{base}{perm[i] + 1}" for i in range(g)}
            s = serialize(mapping)
            if best is None or s < best:
                best, best_map = s, mapping
        return best, best_map
    mapping = {e: f"{base}{i + 1}" for i, e in enumerate(renameable)}
    return serialize(mapping), mapping


# ---------------------------------------------------------------------------
# surviving-move enumeration (bitmask level)

def _combine(op, truth: int) -> bool:
    kind = op[0]
    if kind == "impl":
        return not truth >> op[1] & 1 or bool(truth >> op[2] & 1)
    if kind == "and":
        return bool(truth >> op[1] & 1 and truth >> op[2] & 1)
    if kind == "or":
        return bool(truth >> op[1] & 1 or truth >> op[2] & 1)
    if kind == "all":
        return all(truth >> j & 1 for j in op[1])
    return any(truth >> j & 1 for j in op[1])


def _coherent_additions(ev: ClosureEvaluator, own: int, other: int,
                        side: str) -> Iterator[int]:
    """All addition masks S (disjoint from `own`) such that every member of
    own|S is true after adding S to the mover's side.  For side "o" the
    stream is further filtered to leave the other side a false member.
    Truth is carried as a bitmask along the members' topological order, so
    a branch dies as soon as a fixed member of the mover's set goes
    false."""
    ops = ev.ops
    n = len(ops)
    # stack entries: (next index, truth mask so far, added mask, mistakes
    # already inflicted on the other side)
    stack = [(0, 0, 0, 0)]
    while stack:
        i, truth, added, hurt = stack.pop()
        alive = True
        while i < n:
            op = ops[i]
            kind = op[0]
            bit = 1 << i
            if own & bit:
                if kind == "atom":
                    t = True if side == "o" else bool(other & bit)
                elif kind == "bot":
                    t = False
                else:
                    t = _combine(op, truth)
                if not t:
                    alive = False
                    break
                truth |= bit
                i += 1
                continue
            if kind == "atom":
                if side == "o":
                    if other & bit and not hurt:
                        # skipping this atom leaves it false for the others
                        stack.append((i + 1, truth, added, hurt + 1))
                    else:
                        stack.append((i + 1, truth, added, hurt))
                    truth |= bit
                    added |= bit
                    i += 1
                    continue
                t = bool(other & bit)
                if t:
                    stack.append((i + 1, truth | bit, added | bit, hurt))
                    truth |= bit
                i += 1
                continue
            if kind == "bot":
                i += 1
                continue
            t_marked = _combine(op, truth)
            marked_anyway = bool(other & bit)
            if t_marked:
                stack.append((i + 1, truth | bit, added | bit, hurt))
            if marked_anyway:
                if t_marked:
                    truth |= bit
                elif side == "o":
                    hurt += 1
            i += 1
        if alive and (side == "p" or hurt):
            yield added


def _greedy_addition(ev: ClosureEvaluator, own: int, other: int,
                     side: str) -> int | None:
    """The add-everything-addable coherent set, or None if some fixed
    member of the mover's side goes false under it."""
    ops = ev.ops
    truth = 0
    added = 0
    for i, op in enumerate(ops):
        kind = op[0]
        bit = 1 << i
        if own & bit:
            if kind == "atom":
                t = True if side == "o" else bool(other & bit)
            elif kind == "bot":
                t = False
            else:
                t = _combine(op, truth)
            if not t:
                return None
            truth |= bit
            continue
        if kind == "bot":
            continue
        if kind == "atom":
            if side == "o" or other & bit:
                truth |= bit
                added |= bit
            continue
        if _combine(op, truth):
            truth |= bit
            added |= bit
    return added


def _intervals(ev: ClosureEvaluator, o_mask: int, p_mask: int,
               side: str) -> tuple[list[bool], list[bool]]:
    """Sound truth bounds per member over every possible addition set of
    the given side ("o": atoms and markings may still enter O; "p": atom
    truth is fixed, markings may enter P).  lo[i] True means member i is
    true under every addition; hi[i] False means it is false under every
    addition."""
    ops = ev.ops
    n = len(ops)
    lo = [False] * n
    hi = [False] * n
    marked = o_mask | p_mask
    for i, op in enumerate(ops):
        kind = op[0]
        if kind == "bot":
            continue
        if kind == "atom":
            if o_mask >> i & 1:
                lo[i] = hi[i] = True
            elif side == "o":
                hi[i] = True
            continue
        if kind == "impl":
            l, r = op[1], op[2]
            if l == r:
                v_lo = v_hi = True
            else:
                v_lo = (not hi[l]) or lo[r]
                v_hi = (not lo[l]) or hi[r]
        elif kind == "and":
            v_lo = lo[op[1]] and lo[op[2]]
            v_hi = hi[op[1]] and hi[op[2]]
        elif kind == "or":
            v_lo = lo[op[1]] or lo[op[2]]
            v_hi = hi[op[1]] or hi[op[2]]
        elif kind == "all":
            v_lo = all(lo[j] for j in op[1])
            v_hi = all(hi[j] for j in op[1])
        else:
            v_lo = any(lo[j] for j in op[1])
            v_hi = any(hi[j] for j in op[1])
        if marked >> i & 1:
            lo[i], hi[i] = v_lo, v_hi
        else:
            hi[i] = v_hi  # may stay unmarked, hence possibly false
    return lo, hi


def _safe_additions(ev: ClosureEvaluator, o_mask: int, p_mask: int) -> int:
    """Candidates whose truth, once marked, is guaranteed under every
    further marking and atom addition at this closure level.  Used only to
    order Proponent's moves: marking these can never become a mistake."""
    ops = ev.ops
    n = len(ops)
    _lo, hi = _intervals(ev, o_mask, p_mask, "o")
    accepted = 0
    while True:
        marked = o_mask | p_mask | accepted
        lo = [False] * n
        new = 0
        for i, op in enumerate(ops):
            kind = op[0]
            if kind == "bot":
                continue
            bit = 1 << i
            if kind == "atom":
                v = bool(o_mask & bit)
            elif kind == "impl":
                v = True if op[1] == op[2] else (not hi[op[1]]) or lo[op[2]]
            elif kind == "and":
                v = lo[op[1]] and lo[op[2]]
            elif kind == "or":
                v = lo[op[1]] or lo[op[2]]
            elif kind == "all":
                v = all(lo[j] for j in op[1])
            else:
                v = any(lo[j] for j in op[1])
            if not v:
                continue
            lo[i] = True
            if not marked & bit:
                new |= bit
        if not new:
            return accepted
        accepted |= new


def _attacking_additions(ev: ClosureEvaluator, o_mask: int, p_mask: int,
                         skip: set[int]) -> Iterator[int]:
    """Proponent additions that falsify some member of O (his own set may
    stay broken: Opponent then has a mistake and must move)."""
    candidates = [i for i in range(len(ev.ops)) if not p_mask >> i & 1]
    o_indices = tuple(_bits(o_mask))
    for size in range(1, len(candidates) + 1):
        for combo in combinations(candidates, size):
            added = 0
            for i in combo:
                added |= 1 << i
            if added in skip:
                continue
            t = ev.truth(o_mask, p_mask | added)
            if any(not t[j] for j in o_indices):
                yield added


# ---------------------------------------------------------------------------
# solver

class SolveVerdict:
    """Exact winner at a fresh-element budget, with a replayable witness.

    `decisions` (the witness as canonical-position-keyed records) is
    materialized lazily: playing the witness never needs it."""

    def __init__(self, budget: int, winner: Player, explored: int,
                 solver: "_Solver"):
        self.budget = budget
        self.winner = winner
        self.explored = explored
        self._solver = solver
        self._decisions: dict[str, dict] | None = None

    @property
    def decisions(self) -> Mapping[str, dict]:
        if self._decisions is None:
            self._decisions = self._solver._build_witness(
                self.winner, *self._solver.root_masks())
        return self._decisions

    @property
    def witness(self) -> "SolverBackedStrategy":
        return SolverBackedStrategy(self.winner, self._solver)


class _Level:
    def __init__(self, position: Position, delta: tuple[str, ...],
                 renameable: tuple[str, ...]):
        self.delta = delta
        self.closure = position.closure.with_delta(delta)
        self.ev = get_evaluator(self.closure)
        self.renameable = renameable
        g = len(renameable)
        identity = tuple(range(len(self.ev.members)))
        self.named_perms: list[tuple[dict, tuple[int, ...]]] = [({}, identity)]
        if 0 < g <= 6:
            seen = {identity}
            for perm in permutations(range(g)):
                mapping = {renameable[i]: renameable[perm[i]] for i in range(g)}
                remap = tuple(self.ev.index[_rename(f, mapping)]
                              for f in self.ev.members)
                if remap not in seen:
                    seen.add(remap)
                    self.named_perms.append((mapping, remap))
        # identity excluded: it cannot improve the canonical minimum
        self.perms = tuple(r for _m, r in self.named_perms[1:])


class _Solver:
    def __init__(self, start: Position, budget: int, node_limit: int,
                 subset_ceiling: int):
        self.start = start
        self.budget = budget
        self.node_limit = node_limit
        self.ceiling = subset_ceiling
        self.explored = 0
        self.memo: dict = {}
        self.canon_cache: dict = {}
        self.win_moves: dict = {}
        self.decisions: dict[Player, dict[str, dict]] = {
            Player.OPPONENT: {}, Player.PROPONENT: {}}
        self.fresh = fresh_names(start.delta, budget)
        base_game = start.game_elements()
        self.levels: list[_Level] = []
        for k in range(budget + 1):
            delta = start.delta + self.fresh[:k]
            self.levels.append(_Level(start, delta, base_game + self.fresh[:k]))
        # index lifting between consecutive levels
        self.lifts: list[tuple[int, ...]] = []
        for k in range(budget):
            small, big = self.levels[k].ev, self.levels[k + 1].ev
            self.lifts.append(tuple(big.index[f] for f in small.members))

    def lift(self, mask: int, k_from: int, k_to: int) -> int:
        for k in range(k_from, k_to):
            table = self.lifts[k]
            out = 0
            for b in _bits(mask):
                out |= 1 << table[b]
            mask = out
        return mask

    def canon(self, k: int, o: int, p: int):
        key = (k, o, p)
        hit = self.canon_cache.get(key)
        if hit is not None:
            return hit
        best_o, best_p = o, p
        for remap in self.levels[k].perms:
            co = 0
            for b in _bits(o):
                co |= 1 << remap[b]
            if co > best_o:
                continue
            cp = 0
            for b in _bits(p):
                cp |= 1 << remap[b]
            if (co, cp) < (best_o, best_p):
                best_o, best_p = co, cp
        result = (k, best_o, best_p)
        self.canon_cache[key] = result
        return result

    def position_at(self, k: int, o: int, p: int) -> Position:
        level = self.levels[k]
        return Position(
            self.start.gamma, level.delta,
            level.ev.mask_formulas(o), level.ev.mask_formulas(p),
            level.closure)

    def surviving(self, k: int, o: int, p: int, mover: Player,
                  remaining: int):
        """Yield (k', o', p', fresh_count, add_mask) for every move after
        which it is the other player's turn.  Cheap interval bounds skip
        enumeration where no move of the required kind can exist, and
        Proponent tries the greedy-maximal coherent addition first."""
        if mover is Player.OPPONENT:
            for f_extra in range(remaining + 1):
                k2 = k + f_extra
                level = self.levels[k2]
                self._check_ceiling(level)
                o2 = self.lift(o, k, k2)
                p2 = self.lift(p, k, k2)
                lo, _hi = _intervals(level.ev, o2, p2, "o")
                if all(lo[j] for j in _bits(p2)):
                    continue  # no addition can give Proponent a mistake
                for added in _coherent_additions(level.ev, o2, p2, "o"):
                    if f_extra == 0 and not added:
                        continue
                    yield (k2, o2 | added, p2, f_extra, added)
        else:
            level = self.levels[k]
            self._check_ceiling(level)
            lo, hi = _intervals(level.ev, o, p, "p")
            seen: set[int] = set()
            if all(hi[j] for j in _bits(p)):
                ev = level.ev
                first_tries = [_safe_additions(ev, o, p),
                               _greedy_addition(ev, p, o, "p")]
                for added in first_tries:
                    if not added or added in seen:
                        continue
                    t = ev.truth(o, p | added)
                    if all(t[j] for j in _bits(p | added)):
                        seen.add(added)
                        yield (k, o, p | added, 0, added)
                rest = sorted(
                    (s for s in _coherent_additions(ev, p, o, "p")
                     if s and s not in seen),
                    key=lambda s: (-bin(s).count("1"), s))
                seen.update(rest)
                for added in rest:
                    yield (k, o, p | added, 0, added)
            if not all(lo[j] for j in _bits(o)):
                for added in _attacking_additions(level.ev, o, p, seen):
                    yield (k, o, p | added, 0, added)

    def _check_ceiling(self, level: _Level) -> None:
        size = len(level.ev.members)
        if size > self.ceiling:
            raise SolverInconclusiveError(
                f"closure has {size} members, above the subset enumeration "
                f"ceiling {self.ceiling}; raise it to solve this instance",
                self.explored)

    def mover_at(self, k: int, o: int, p: int) -> Player:
        t = self.levels[k].ev.truth(o, p)
        o_bad = any(not t[i] for i in _bits(o))
        p_bad = any(not t[i] for i in _bits(p))
        return Player.PROPONENT if (not o_bad and p_bad) else Player.OPPONENT

    def value(self, k: int, o: int, p: int, remaining: int) -> Player:
        key = self.canon(k, o, p)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.explored += 1
        if self.explored > self.node_limit:
            raise SolverInconclusiveError(
                f"node limit {self.node_limit} exceeded", self.explored)
        mover = self.mover_at(k, o, p)
        winner: Player | None = None
        for (k2, o2, p2, f_extra, added) in self.surviving(
                k, o, p, mover, remaining):
            if self.value(k2, o2, p2, remaining - (k2 - k)) == mover:
                winner = mover
                self.win_moves[key] = (k, o, p, k2, f_extra, added)
                break
        if winner is None:
            winner = mover.other
        self.memo[key] = winner
        return winner

    def _record(self, mover: Player, k: int, o: int, p: int, k2: int,
                f_extra: int, added: int) -> None:
        pos = self.position_at(k, o, p)
        key, to_canon = canonicalize_position(pos)
        if key in self.decisions[mover]:
            return
        base = _canonical_base(pos)
        mapping = dict(to_canon)
        g = len(to_canon)
        for i, name in enumerate(self.fresh[k:k2]):
            mapping[name] = f"{base}{g + i + 1}"
        members = self.levels[k2].ev.members
        add_strs = sorted(
            format_formula(_rename(members[i], mapping)) for i in _bits(added))
        self.decisions[mover][key] = {"fresh": f_extra, "add": add_strs}

    def _build_witness(self, winner: Player, o0: int, p0: int) -> dict[str, dict]:
        """Walk the winning region along memoized values, recording the
        winner's move at each of his decision points.  At the loser's
        nodes every surviving child stays inside the region."""
        seen = set()
        stack = [(0, o0, p0, self.budget)]
        while stack:
            k, o, p, remaining = stack.pop()
            ck = self.canon(k, o, p)
            if ck in seen:
                continue
            seen.add(ck)
            mover = self.mover_at(k, o, p)
            for (k2, o2, p2, f_extra, added) in self.surviving(
                    k, o, p, mover, remaining):
                rem2 = remaining - (k2 - k)
                child_value = self.memo.get(self.canon(k2, o2, p2))
                if mover == winner:
                    # same iteration order as value(): the first winning
                    # child is the move the solver chose
                    if child_value == winner:
                        self._record(mover, k, o, p, k2, f_extra, added)
                        stack.append((k2, o2, p2, rem2))
                        break
                else:
                    stack.append((k2, o2, p2, rem2))
        return dict(self.decisions[winner])

    def root_masks(self) -> tuple[int, int]:
        ev0 = self.levels[0].ev
        return ev0.to_mask(self.start.o_set), ev0.to_mask(self.start.p_set)

    def run(self) -> SolveVerdict:
        o0, p0 = self.root_masks()
        winner = self.value(0, o0, p0, self.budget)
        return SolveVerdict(self.budget, winner, self.explored, self)


def solve_game(start: Position, budget: int, *,
               node_limit: int = DEFAULT_NODE_LIMIT,
               subset_ceiling: int = DEFAULT_SUBSET_CEILING) -> SolveVerdict:
    """Exact winner of the game where Opponent may introduce at most
    `budget` fresh elements in total, with a replayable witness strategy
    for the winner.  Raises SolverInconclusiveError when the node limit or
    the closure-size ceiling is hit."""
    if budget < 0:
        raise SolverError("budget must be non-negative")
    return _Solver(start, budget, node_limit, subset_ceiling).run()


# ---------------------------------------------------------------------------
# witness strategy

class SolverBackedStrategy:
    """Plays the solver's winning move at every solved position; resigns
    off the solved book (e.g. when the adversary exceeds the budget).

    A queried position is translated into the solver's element frame by
    introduction order; the recorded winning move is then aligned through
    the renaming that matches the stored representative position."""
    kind = "solver_backed"

    def __init__(self, side: Player, solver: "_Solver"):
        self.side = side
        self._solver = solver

    def next_move(self, position: Position) -> Move | None:
        s = self._solver
        base_count = len(s.start.game_elements())
        q_game = position.game_elements()
        k = len(q_game) - base_count
        if not 0 <= k <= s.budget or position.gamma != s.start.gamma:
            return None
        level = s.levels[k]
        to_solver = dict(zip(q_game, level.renameable))
        ev = level.ev
        try:
            qo = ev.to_mask(_rename(f, to_solver) for f in position.o_set)
            qp = ev.to_mask(_rename(f, to_solver) for f in position.p_set)
        except KeyError:
            return None
        entry = s.win_moves.get(s.canon(k, qo, qp))
        if entry is None:
            return None
        (rk, ro, rp, k2, f_extra, added) = entry
        if rk != k:
            return None
        for mapping, remap in s.levels[k].named_perms:
            mo = 0
            for b in _bits(ro):
                mo |= 1 << remap[b]
            if mo != qo:
                continue
            mp = 0
            for b in _bits(rp):
                mp |= 1 << remap[b]
            if mp == qp:
                break
        else:
            return None
        # solver frame -> position frame, plus names for the fresh elements
        back = {v: k_ for k_, v in to_solver.items()}
        actual_fresh = fresh_names(position.delta, f_extra)
        rename_map = dict(mapping)
        for i, name in enumerate(s.fresh[k:k2]):
            rename_map[name] = name
            back[name] = actual_fresh[i]
        add = frozenset(
            _rename(_rename(f, rename_map), back)
            for f in s.levels[k2].ev.mask_formulas(added))
        if self.side is Player.OPPONENT:
            return OpponentMove(actual_fresh, add)
        return ProponentMove(add)


# ---------------------------------------------------------------------------
# formula-level surviving moves (shared with extraction and tests)

def surviving_moves(position: Position, fresh_budget: int = 0, *,
                    subset_ceiling: int = DEFAULT_SUBSET_CEILING) -> list[Move]:
    """Every move of the player to move after which the turn passes to the
    other player.  All other legal moves lose on the spot."""
    mover = to_move(position)
    solver = _Solver(position, fresh_budget if mover is Player.OPPONENT else 0,
                     DEFAULT_NODE_LIMIT, subset_ceiling)
    ev0 = solver.levels[0].ev
    o0 = ev0.to_mask(position.o_set)
    p0 = ev0.to_mask(position.p_set)
    out: list[Move] = []
    for (k2, _o2, _p2, f_extra, added) in solver.surviving(
            0, o0, p0, mover, solver.budget):
        formulas = solver.levels[k2].ev.mask_formulas(added)
        if mover is Player.OPPONENT:
            out.append(OpponentMove(solver.fresh[:f_extra], formulas))
        else:
            out.append(ProponentMove(formulas))
    return out


# ---------------------------------------------------------------------------
# verdict export

def export_verdict(v: SolveVerdict) -> str:
    doc = {
        "budget": v.budget,
        "winner": v.winner.value,
        "explored": v.explored,
        "decisions": [
            {"position": key, "fresh": entry["fresh"], "add": entry["add"]}
            for key, entry in sorted(v.decisions.items())
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
