"""Finite predicate Kripke models: intuitionistic forcing, validation,
bounded enumeration and countermodel search.

Worlds form a finite poset; each world carries an individual domain and a
set of true ground atoms, both monotone along the order.  Element names
occurring in formulas are resolved through an (injective) interpretation
map, identity by default.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Iterable, Iterator, Mapping

import yaml

from .formula import (
    Atom, Bottom, Elem, Exists, Forall, Formula, Impl, And, Or, Signature,
    canonical_key, constants_of, element_names, format_formula, is_closed,
    open_binder, parse_inferred,
)


class KripkeError(ValueError):
    pass


class ModelError(KripkeError):
    """Raised when loading a model file that fails validation."""


class EnumerationLimitError(KripkeError):
    """Bounds describe a search space beyond the configured ceiling."""


# ---------------------------------------------------------------------------
# model

@dataclass(frozen=True, eq=False)
class KripkeModel:
    worlds: tuple[str, ...]
    order: frozenset[tuple[str, str]]          # full reflexive-transitive <=
    domain: Mapping[str, tuple[str, ...]]
    atoms: Mapping[str, frozenset[Atom]]
    interpretation: Mapping[str, str] = field(default_factory=dict)
    allow_empty_domains: bool = False
    _above: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for w in self.worlds:
            ups = tuple(v for v in self.worlds if (w, v) in self.order)
            self._above[w] = ups

    def above(self, w: str) -> tuple[str, ...]:
        """Worlds v with w <= v, in world order."""
        return self._above[w]

    def leq(self, w: str, v: str) -> bool:
        return (w, v) in self.order

    def resolve(self, name: str) -> str:
        return self.interpretation.get(name, name)

    def domain_set(self, w: str) -> frozenset[str]:
        return frozenset(self.domain.get(w, ()))

    def minimal_worlds(self) -> tuple[str, ...]:
        return tuple(w for w in self.worlds
                     if all(not self.leq(v, w) or v == w for v in self.worlds))


def validate_model(m: KripkeModel) -> list[str]:
    """Empty list means every invariant holds; otherwise one message per
    violation naming the offending worlds/atoms."""
    bad: list[str] = []
    ws = set(m.worlds)
    if len(ws) != len(m.worlds):
        bad.append("duplicate world ids")
    for (a, b) in m.order:
        if a not in ws or b not in ws:
            bad.append(f"order mentions unknown world ({a},{b})")
    for name, mapping in (("domain", m.domain), ("atoms", m.atoms)):
        for w in mapping:
            if w not in ws:
                bad.append(f"{name} mentions unknown world {w}")
    for w in m.worlds:
        if (w, w) not in m.order:
            bad.append(f"order not reflexive at {w}")
    for (a, b) in m.order:
        if a != b and (b, a) in m.order:
            bad.append(f"order not antisymmetric on ({a},{b})")
        for (c, d) in m.order:
            if b == c and (a, d) not in m.order:
                bad.append(f"order not transitive via ({a},{b}),({c},{d})")
    for w in m.worlds:
        dom = m.domain.get(w, ())
        if len(set(dom)) != len(dom):
            bad.append(f"duplicate domain element at {w}")
        if not dom and not m.allow_empty_domains:
            bad.append(f"empty domain at {w} (model not empty-domain-tolerant)")
    for (a, b) in m.order:
        if not m.domain_set(a) <= m.domain_set(b):
            bad.append(f"domain not monotone from {a} to {b}")
        if not m.atoms.get(a, frozenset()) <= m.atoms.get(b, frozenset()):
            bad.append(f"valuation not monotone from {a} to {b}")
    for w in m.worlds:
        for atom in m.atoms.get(w, frozenset()):
            if not isinstance(atom, Atom) or not all(
                    isinstance(t, Elem) for t in atom.args):
                bad.append(f"non-ground atom {atom} at {w}")
                continue
            outside = [t.name for t in atom.args
                       if t.name not in m.domain_set(w)]
            if outside:
                bad.append(
                    f"atom {format_formula(atom)} at {w} uses elements "
                    f"outside the domain: {', '.join(outside)}")
    image = list(m.interpretation.values())
    if len(set(image)) != len(image):
        bad.append("interpretation is not injective")
    for w in m.worlds:
        missing = [e for e in image if e not in m.domain_set(w)]
        if missing:
            bad.append(f"interpreted elements {missing} missing from "
                       f"domain of {w}")
    return bad


# ---------------------------------------------------------------------------
# forcing

def _resolve_formula(m: KripkeModel, f: Formula) -> Formula:
    if not m.interpretation:
        return f
    from .formula import map_terms
    return map_terms(
        f, lambda t, _d: Elem(m.resolve(t.name)) if isinstance(t, Elem) else t)


def force_set(m: KripkeModel, f: Formula) -> frozenset[str]:
    """Worlds of `m` forcing the closed formula `f` (elements resolved
    through the interpretation)."""
    if not is_closed(f):
        raise KripkeError(f"forcing needs a closed formula: {f}")
    g = _resolve_formula(m, f)
    return _force_set_resolved(m, g)


def _force_set_resolved(m: KripkeModel, f: Formula) -> frozenset[str]:
    cached = m._cache.get(f)
    if cached is not None:
        return cached
    if isinstance(f, Bottom):
        out = frozenset()
    elif isinstance(f, Atom):
        out = frozenset(w for w in m.worlds if f in m.atoms.get(w, frozenset()))
    elif isinstance(f, And):
        out = _force_set_resolved(m, f.left) & _force_set_resolved(m, f.right)
    elif isinstance(f, Or):
        out = _force_set_resolved(m, f.left) | _force_set_resolved(m, f.right)
    elif isinstance(f, Impl):
        ta = _force_set_resolved(m, f.left)
        tb = _force_set_resolved(m, f.right)
        out = frozenset(
            w for w in m.worlds
            if all(v not in ta or v in tb for v in m.above(w)))
    elif isinstance(f, Forall):
        local = set()
        for v in m.worlds:
            if all(v in _force_set_resolved(m, open_binder(f.body, Elem(d)))
                   for d in m.domain.get(v, ())):
                local.add(v)
        out = frozenset(w for w in m.worlds
                        if all(v in local for v in m.above(w)))
    elif isinstance(f, Exists):
        out = frozenset(
            w for w in m.worlds
            if any(w in _force_set_resolved(m, open_binder(f.body, Elem(d)))
                   for d in m.domain.get(w, ())))
    else:
        raise TypeError(f"not a formula: {f!r}")
    m._cache[f] = out
    return out


def forces(m: KripkeModel, w: str, f: Formula) -> bool:
    """Standard intuitionistic forcing at world `w`."""
    if w not in m._above:
        raise KripkeError(f"unknown world {w!r}")
    for name in element_names(f):
        if m.resolve(name) not in m.domain_set(w):
            raise KripkeError(
                f"element {name!r} not interpreted in the domain of {w}")
    return w in force_set(m, f)


def cone(m: KripkeModel, w: str) -> KripkeModel:
    """The submodel of all worlds above `w`."""
    keep = set(m.above(w))
    return KripkeModel(
        worlds=tuple(v for v in m.worlds if v in keep),
        order=frozenset(p for p in m.order if p[0] in keep and p[1] in keep),
        domain={v: m.domain[v] for v in keep},
        atoms={v: m.atoms.get(v, frozenset()) for v in keep},
        interpretation=dict(m.interpretation),
        allow_empty_domains=m.allow_empty_domains,
    )


# ---------------------------------------------------------------------------
# frame classes (finite instances only)

@dataclass(frozen=True)
class FrameClassReport:
    finite_worlds: bool
    finite_domains: bool
    member_of: tuple[str, ...]


ALL_CLASS_TAGS = ("Fin", "finFin", "N", "finN", "Cas", "finCas")


def classify(m: KripkeModel) -> FrameClassReport:
    """Every representable model is finite with finite domains, hence lies
    in all six class tags; infinite classes are out of engine scope."""
    return FrameClassReport(True, True, ALL_CLASS_TAGS)


# ---------------------------------------------------------------------------
# enumeration

@lru_cache(maxsize=None)
def _canonical_posets(k: int) -> tuple[frozenset[tuple[int, int]], ...]:
    """Canonical representatives of all posets on k labelled points, as
    full reflexive-transitive <= relations over range(k)."""
    if k > 4:
        raise EnumerationLimitError(
            f"poset enumeration ceiling exceeded: {k} worlds (max 4)")
    pairs = [(i, j) for i in range(k) for j in range(k) if i != j]
    found = []
    for mask in range(1 << len(pairs)):
        strict = {pairs[i] for i in range(len(pairs)) if mask >> i & 1}
        ok = True
        for (a, b) in strict:
            if (b, a) in strict:
                ok = False
                break
            for (c, d) in strict:
                if b == c and (a, d) not in strict:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        key = tuple(sorted(strict))
        canon = min(
            tuple(sorted((p[a], p[b]) for (a, b) in strict))
            for p in permutations(range(k)))
        if key == canon:
            full = frozenset(strict) | frozenset((i, i) for i in range(k))
            found.append(full)
    found.sort(key=lambda rel: tuple(sorted(rel)))
    return tuple(found)


def _linear_extension(k: int, order: frozenset[tuple[int, int]]) -> list[int]:
    below = {i: sum(1 for j in range(k) if (j, i) in order) for i in range(k)}
    return sorted(range(k), key=lambda i: (below[i], i))


def _monotone_assignments(
        k: int, order: frozenset[tuple[int, int]], topo: list[int],
        options: Mapping[int, list[frozenset]]) -> Iterator[dict[int, frozenset]]:
    """All maps world -> set with w<=v implying map[w] <= map[v], each
    map[w] drawn from options[w]."""

    def rec(i: int, chosen: dict[int, frozenset]) -> Iterator[dict[int, frozenset]]:
        if i == len(topo):
            yield dict(chosen)
            return
        w = topo[i]
        lower = frozenset().union(
            *[chosen[v] for v in topo[:i] if (v, w) in order]) \
            if any((v, w) in order for v in topo[:i]) else frozenset()
        for opt in options[w]:
            if lower <= opt:
                chosen[w] = opt
                yield from rec(i + 1, chosen)
                del chosen[w]

    yield from rec(0, {})


def _first_use_canonical(topo_sets: list[frozenset[str]], pool: list[str]) -> bool:
    """Cheap isomorphism filter: the extras used, scanned in world order and
    pool order, must appear as the pool prefix in pool order."""
    seen: list[str] = []
    for s in topo_sets:
        for e in pool:
            if e in s and e not in seen:
                seen.append(e)
    return seen == pool[: len(seen)]


def enumerate_models(sig: Signature, bounds: tuple[int, int], *,
                     allow_empty_domains: bool = False,
                     limit: int = 1_000_000) -> Iterator[KripkeModel]:
    """Every model up to `bounds` = (max worlds, max domain size), exactly
    once, in a canonical order: fewest worlds first, then smallest maximal
    domain.  Signature constants appear in every world's domain; the
    remaining domain elements come from a canonical pool.  The stream is
    pure, restartable and reproducible."""
    max_worlds, max_dom = bounds
    if max_worlds < 1:
        raise KripkeError("need at least one world")
    required = list(sig.constants)
    if len(required) > max_dom:
        return
    yielded = 0
    cap = max_dom - len(required)
    for k in range(1, max_worlds + 1):
        world_names = [f"w{i}" for i in range(k)]
        pool = []
        i = 1
        while len(pool) < cap * k:
            name = f"d{i}"
            if name not in required:
                pool.append(name)
            i += 1
        lowest_size = len(required) if (required or allow_empty_domains) else 1
        for dmax in range(lowest_size, max_dom + 1):
            extra_cap = dmax - len(required)
            for order_int in _canonical_posets(k):
                topo = _linear_extension(k, order_int)
                opts = {
                    w: [frozenset(c)
                        for size in range(0, extra_cap + 1)
                        for c in combinations(pool, size)
                        if required or allow_empty_domains or size > 0]
                    for w in range(k)
                }
                for extras in _monotone_assignments(k, order_int, topo, opts):
                    sizes = [len(required) + len(extras[w]) for w in range(k)]
                    if max(sizes) != dmax:
                        continue
                    ordered_sets = [extras[w] for w in range(k)]
                    if not _first_use_canonical(ordered_sets, pool):
                        continue
                    domains = {
                        world_names[w]: tuple(required) + tuple(
                            sorted(extras[w], key=pool.index))
                        for w in range(k)
                    }
                    atom_opts: dict[int, list[frozenset]] = {}
                    feasible = True
                    for w in range(k):
                        ground = []
                        for pred, arity in sorted(sig.predicates.items()):
                            for args in product(domains[world_names[w]],
                                                repeat=arity):
                                ground.append(Atom(pred, tuple(map(Elem, args))))
                        if len(ground) > 12:
                            raise EnumerationLimitError(
                                f"{len(ground)} candidate atoms at one world "
                                f"exceed the enumeration ceiling; shrink the "
                                f"bounds {bounds}")
                        ground.sort(key=canonical_key)
                        atom_opts[w] = [
                            frozenset(c)
                            for size in range(len(ground) + 1)
                            for c in combinations(ground, size)]
                        feasible = feasible and bool(atom_opts[w])
                    if not feasible:
                        continue
                    order_named = frozenset(
                        (world_names[a], world_names[b]) for (a, b) in order_int)
                    for valuation in _monotone_assignments(
                            k, order_int, topo, atom_opts):
                        yielded += 1
                        if yielded > limit:
                            raise EnumerationLimitError(
                                f"more than {limit} models within bounds "
                                f"{bounds}; raise the limit or shrink bounds")
                        yield KripkeModel(
                            worlds=tuple(world_names),
                            order=order_named,
                            domain=domains,
                            atoms={world_names[w]: valuation[w]
                                   for w in range(k)},
                            interpretation={c: c for c in required},
                            allow_empty_domains=allow_empty_domains,
                        )


# ---------------------------------------------------------------------------
# countermodel search

def _inferred_predicates(formulas: Iterable[Formula]) -> dict[str, int]:
    preds: dict[str, int] = {}

    def walk(f: Formula) -> None:
        if isinstance(f, Atom):
            preds.setdefault(f.pred, len(f.args))
        elif isinstance(f, (Impl, And, Or)):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, (Forall, Exists)):
            walk(f.body)

    for f in formulas:
        walk(f)
    return preds


def find_countermodel(
        premises: Iterable[Formula], phi: Formula, bounds: tuple[int, int], *,
        sig: Signature | None = None, allow_empty_domains: bool = False,
        limit: int = 1_000_000) -> tuple[KripkeModel, str] | None:
    """First model within `bounds` forcing every premise at every world but
    not forcing `phi` at the returned root, or None.  Absence means "no
    countermodel at these bounds", never validity.  Elements occurring in
    the formulas are treated as constants that every domain interprets."""
    premises = list(premises)
    for f in premises + [phi]:
        if not is_closed(f):
            raise KripkeError(f"open formula: {f}")
    preds = dict(sig.predicates) if sig is not None else {}
    for name, arity in _inferred_predicates(premises + [phi]).items():
        preds.setdefault(name, arity)
    search_sig = Signature(preds, constants_of(premises + [phi]))
    for m in enumerate_models(search_sig, bounds,
                              allow_empty_domains=allow_empty_domains,
                              limit=limit):
        if any(force_set(m, o) != frozenset(m.worlds) for o in premises):
            continue
        failing = [w for w in m.worlds if w not in force_set(m, phi)]
        if not failing:
            continue
        root = failing[0]
        # mandatory self-check before returning
        if validate_model(m):
            raise KripkeError("enumerated model failed validation")
        if not all(forces(m, w, o) for o in premises for w in m.worlds) \
                or forces(m, root, phi):
            raise KripkeError("countermodel self-check failed")
        return m, root
    return None


# ---------------------------------------------------------------------------
# model files

def save_model(m: KripkeModel) -> str:
    """Structured text form; `order` holds covering pairs only."""
    strict = [(a, b) for (a, b) in m.order if a != b]
    covers = [
        (a, b) for (a, b) in strict
        if not any((a, z) in m.order and (z, b) in m.order
                   and z not in (a, b) for z in m.worlds)
    ]
    covers.sort()
    lines = [
        f"worlds: [{', '.join(m.worlds)}]",
        "order: [" + ", ".join(f"[{a}, {b}]" for (a, b) in covers) + "]",
        "domain: {" + ", ".join(
            f"{w}: [{', '.join(m.domain.get(w, ()))}]" for w in m.worlds) + "}",
        "atoms: {" + ", ".join(
            f'{w}: [{", ".join(repr(format_formula(a)) for a in sorted(m.atoms.get(w, frozenset()), key=canonical_key))}]'
            for w in m.worlds) + "}",
    ]
    if m.allow_empty_domains:
        lines.append("empty_domain_tolerant: true")
    if m.interpretation and m.interpretation != {
            e: e for e in m.interpretation}:
        lines.append("interpretation: {" + ", ".join(
            f"{k}: {v}" for k, v in sorted(m.interpretation.items())) + "}")
    return "\n".join(lines) + "\n"


def load_model(text: str) -> KripkeModel:
    """Parse the model file format and validate; invalid files are rejected."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ModelError(f"cannot read model file: {e}") from None
    if not isinstance(data, dict) or "worlds" not in data:
        raise ModelError("model file needs at least a `worlds` entry")
    worlds = tuple(str(w) for w in data["worlds"])
    covers = [(str(a), str(b)) for a, b in data.get("order", [])]
    order = {(w, w) for w in worlds} | set(covers)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(order):
            for (c, d) in list(order):
                if b == c and (a, d) not in order:
                    order.add((a, d))
                    changed = True
    domain = {str(w): tuple(str(e) for e in elems)
              for w, elems in (data.get("domain") or {}).items()}
    for w in worlds:
        domain.setdefault(w, ())
    atom_texts = data.get("atoms") or {}
    flat: list[str] = []
    for elems in atom_texts.values():
        flat.extend(str(a) for a in elems)
    parsed, _sig = parse_inferred(flat)
    for f, text_form in zip(parsed, flat):
        if not isinstance(f, Atom):
            raise ModelError(f"atoms entries must be ground atoms: {text_form}")
    it = iter(parsed)
    atoms = {}
    for w, elems in atom_texts.items():
        atoms[str(w)] = frozenset(next(it) for _ in elems)
    for w in worlds:
        atoms.setdefault(w, frozenset())
    interpretation = {str(k): str(v)
                      for k, v in (data.get("interpretation") or {}).items()}
    m = KripkeModel(
        worlds=worlds,
        order=frozenset(order),
        domain=domain,
        atoms=atoms,
        interpretation=interpretation,
        allow_empty_domains=bool(data.get("empty_domain_tolerant", False)),
    )
    bad = validate_model(m)
    if bad:
        raise ModelError("invalid model: " + "; ".join(bad))
    return m
