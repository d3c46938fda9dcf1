"""First-order formula trees over {->, &, |, false, forall, exists}.

Terms are constants, game-introduced elements and variables; there are no
function symbols.  Bound variables use de Bruijn indices internally, so
alpha-equivalent formulas are structurally equal.  Negation is sugar:
``~A`` is stored as ``A -> false``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence


class FormulaError(ValueError):
    """Base class for formula-layer failures."""


class ParseError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SignatureError(FormulaError):
    pass


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Var:
    """Bound variable as a de Bruijn index (0 = innermost binder)."""
    index: int


@dataclass(frozen=True)
class Free:
    """Named free variable; only appears in open formulas/templates."""
    name: str


@dataclass(frozen=True)
class Elem:
    """A constant or game-introduced element."""
    name: str


Term = Var | Free | Elem


def _term_key(t: Term) -> tuple:
    if isinstance(t, Var):
        return (0, t.index, "")
    if isinstance(t, Elem):
        return (1, 0, t.name)
    return (2, 0, t.name)


# ---------------------------------------------------------------------------
# formulas

class Formula:
    """Abstract base; concrete nodes are the dataclasses below."""

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Impl(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    body: Formula


BOT = Bottom()

_BINARY = {Impl: 2, And: 3, Or: 4}


def neg(f: Formula) -> Formula:
    return Impl(f, BOT)


def canonical_key(f: Formula) -> tuple:
    """Total order: Bottom < Atom < Impl < And < Or < Forall < Exists,
    then lexicographically on children."""
    if isinstance(f, Bottom):
        return (0,)
    if isinstance(f, Atom):
        return (1, f.pred, tuple(_term_key(a) for a in f.args))
    if isinstance(f, Impl):
        return (2, canonical_key(f.left), canonical_key(f.right))
    if isinstance(f, And):
        return (3, canonical_key(f.left), canonical_key(f.right))
    if isinstance(f, Or):
        return (4, canonical_key(f.left), canonical_key(f.right))
    if isinstance(f, Forall):
        return (5, canonical_key(f.body))
    if isinstance(f, Exists):
        return (6, canonical_key(f.body))
    raise TypeError(f"not a formula: {f!r}")


@lru_cache(maxsize=None)
def node_count(f: Formula) -> int:
    if isinstance(f, (Bottom, Atom)):
        return 1
    if isinstance(f, (Impl, And, Or)):
        return 1 + node_count(f.left) + node_count(f.right)
    return 1 + node_count(f.body)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Impl, And, Or)):
        return (f.left, f.right)
    if isinstance(f, (Forall, Exists)):
        return (f.body,)
    return ()


# ---------------------------------------------------------------------------
# traversal helpers

def free_names(f: Formula) -> frozenset[str]:
    out: set[str] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            out.update(a.name for a in g.args if isinstance(a, Free))
        else:
            for c in children(g):
                walk(c)

    walk(f)
    return frozenset(out)


def element_names(f: Formula) -> frozenset[str]:
    out: set[str] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            out.update(a.name for a in g.args if isinstance(a, Elem))
        else:
            for c in children(g):
                walk(c)

    walk(f)
    return frozenset(out)


def _max_dangling(f: Formula, depth: int = 0) -> int:
    """Largest de Bruijn index escaping `depth` binders; -1 if none."""
    if isinstance(f, Atom):
        worst = -1
        for a in f.args:
            if isinstance(a, Var) and a.index >= depth:
                worst = max(worst, a.index - depth)
        return worst
    if isinstance(f, (Forall, Exists)):
        return _max_dangling(f.body, depth + 1)
    worst = -1
    for c in children(f):
        worst = max(worst, _max_dangling(c, depth))
    return worst


def is_closed(f: Formula) -> bool:
    return not free_names(f) and _max_dangling(f) < 0


def map_terms(f: Formula, fn) -> Formula:
    """Rebuild `f` applying `fn(term, depth)` to every atom argument."""

    def walk(g: Formula, depth: int) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.pred, tuple(fn(a, depth) for a in g.args))
        if isinstance(g, Impl):
            return Impl(walk(g.left, depth), walk(g.right, depth))
        if isinstance(g, And):
            return And(walk(g.left, depth), walk(g.right, depth))
        if isinstance(g, Or):
            return Or(walk(g.left, depth), walk(g.right, depth))
        if isinstance(g, Forall):
            return Forall(walk(g.body, depth + 1))
        if isinstance(g, Exists):
            return Exists(walk(g.body, depth + 1))
        return g

    return walk(f, 0)


def open_binder(body: Formula, replacement: Term) -> Formula:
    """Strip one binder level: Var(depth) becomes `replacement`, deeper
    dangling indices shift down by one."""

    def fn(t: Term, depth: int) -> Term:
        if isinstance(t, Var):
            if t.index == depth:
                return replacement
            if t.index > depth:
                return Var(t.index - 1)
        return t

    return map_terms(body, fn)


def subst_frees(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    def fn(t: Term, depth: int) -> Term:
        if isinstance(t, Free) and t.name in mapping:
            return mapping[t.name]
        return t

    return map_terms(f, fn)


def instantiate(f: Formula, var: str, element: str) -> Formula:
    """Replace every free occurrence of `var` by the element `element`.

    Capture is impossible in the nameless representation."""
    if var not in free_names(f):
        raise FormulaError(f"variable {var!r} is not free in {f}")
    return subst_frees(f, {var: Elem(element)})


# ---------------------------------------------------------------------------
# signature

@dataclass(frozen=True)
class Signature:
    """Predicate arities plus the declared constants. No function symbols."""
    predicates: Mapping[str, int]
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        for name, arity in self.predicates.items():
            if not name or not isinstance(name, str):
                raise SignatureError("predicate names must be nonempty strings")
            if arity < 0:
                raise SignatureError(f"negative arity for {name}")
        for c in self.constants:
            if not c:
                raise SignatureError("constant names must be nonempty strings")
            if c in self.predicates:
                raise SignatureError(f"{c!r} declared both predicate and constant")
        if len(set(self.constants)) != len(self.constants):
            raise SignatureError("duplicate constant declaration")

    def with_constants(self, extra: Iterable[str]) -> "Signature":
        merged = list(self.constants)
        for e in extra:
            if e not in merged:
                merged.append(e)
        return Signature(dict(self.predicates), tuple(merged))


def parse_signature(text: str) -> Signature:
    """Read `pred P/2` and `const c` declarations, one per line."""
    preds: dict[str, int] = {}
    consts: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"pred\s+(\w+)\s*/\s*(\d+)", line)
        if m:
            preds[m.group(1)] = int(m.group(2))
            continue
        m = re.fullmatch(r"const\s+(\w+)", line)
        if m:
            consts.append(m.group(1))
            continue
        raise SignatureError(f"line {lineno}: cannot read declaration {line!r}")
    return Signature(preds, tuple(consts))


# ---------------------------------------------------------------------------
# parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<sym>[&|~(),.])|(?P<ident>[^\W\d]\w*))", re.UNICODE
)

_KEYWORDS = {"forall", "exists", "false"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.group("arrow"):
            tokens.append(("->", "->", m.start("arrow")))
        elif m.group("sym"):
            tokens.append((m.group("sym"), m.group("sym"), m.start("sym")))
        else:
            ident = m.group("ident")
            kind = ident if ident in _KEYWORDS else "ident"
            tokens.append((kind, ident, m.start("ident")))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent for: atoms P(c,x); `->` (right assoc), `&`, `|`;
    `false`; `~A` == `A -> false`; `forall v. A` / `exists v. A` with the
    body extending maximally right; precedence ~ > & > | > ->."""

    def __init__(self, text: str, sig: Signature | None,
                 extra_elements: Sequence[str], allow_free: bool):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.sig = sig
        self.extra = set(extra_elements)
        self.allow_free = allow_free
        self.bound: list[str] = []
        # inference state (used when sig is None)
        self.inferred_preds: dict[str, int] = {}
        self.inferred_consts: list[str] = []

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.formula()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"unexpected trailing {tok[1]!r}", tok[2])
        return f

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "->":
            self.take("->")
            return Impl(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek()[0] == "|":
            self.take("|")
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek()[0] == "&":
            self.take("&")
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, _, _ = self.peek()
        if kind == "~":
            self.take("~")
            return Impl(self.unary(), BOT)
        if kind in ("forall", "exists"):
            self.take(kind)
            _, name, pos = self.take("ident")
            if name in _KEYWORDS:
                raise ParseError(f"{name!r} cannot be a variable", pos)
            self.take(".")
            self.bound.append(name)
            body = self.formula()
            self.bound.pop()
            return Forall(body) if kind == "forall" else Exists(body)
        return self.primary()

    def primary(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "false":
            self.take("false")
            return BOT
        if kind == "(":
            self.take("(")
            f = self.formula()
            self.take(")")
            return f
        if kind == "ident":
            self.take("ident")
            if self.peek()[0] == "(":
                self.take("(")
                args = [self.term()]
                while self.peek()[0] == ",":
                    self.take(",")
                    args.append(self.term())
                self.take(")")
                return self.atom(value, tuple(args), pos)
            return self.atom(value, (), pos)
        raise ParseError(f"expected a formula, found {value!r}", pos)

    def atom(self, pred: str, args: tuple[Term, ...], pos: int) -> Atom:
        if self.sig is not None:
            if pred not in self.sig.predicates:
                raise ParseError(f"unknown predicate {pred!r}", pos)
            want = self.sig.predicates[pred]
            if want != len(args):
                raise ParseError(
                    f"predicate {pred} expects {want} argument(s), got {len(args)}",
                    pos)
        else:
            seen = self.inferred_preds.setdefault(pred, len(args))
            if seen != len(args):
                raise ParseError(
                    f"predicate {pred} used with {len(args)} argument(s) "
                    f"but earlier with {seen}", pos)
        return Atom(pred, args)

    def term(self) -> Term:
        _, name, pos = self.take("ident")
        if name in _KEYWORDS:
            raise ParseError(f"{name!r} cannot be a term", pos)
        if name in self.bound:
            depth = len(self.bound) - 1 - self.bound[::-1].index(name)
            return Var(len(self.bound) - 1 - depth)
        if self.sig is not None:
            if name in self.sig.constants or name in self.extra:
                return Elem(name)
            if name in self.sig.predicates:
                raise ParseError(f"predicate {name!r} used as a term", pos)
            if self.allow_free:
                return Free(name)
            raise ParseError(f"unbound variable {name!r} in a closed formula", pos)
        if name in self.inferred_preds:
            raise ParseError(f"predicate {name!r} used as a term", pos)
        if name not in self.inferred_consts:
            self.inferred_consts.append(name)
        return Elem(name)


def parse_formula(text: str, sig: Signature, *,
                  extra_elements: Sequence[str] = (),
                  allow_free: bool = False) -> Formula:
    """Parse `text` against `sig`; printing the result re-parses equal.

    `extra_elements` admits game-introduced element names that are not
    signature constants.  With `allow_free`, unbound identifiers become
    free variables instead of errors."""
    return _Parser(text, sig, extra_elements, allow_free).parse()


def parse_inferred(texts: Sequence[str]) -> tuple[list[Formula], Signature]:
    """Parse the given formulas with the signature inferred from usage:
    arities from first occurrence, free identifiers as constants."""
    preds: dict[str, int] = {}
    consts: list[str] = []
    formulas = []
    for text in texts:
        p = _Parser(text, None, (), False)
        p.inferred_preds = preds
        p.inferred_consts = consts
        formulas.append(p.parse())
    return formulas, Signature(dict(preds), tuple(sorted(consts)))


# ---------------------------------------------------------------------------
# printer

_PRINT_NAMES = ("x", "y", "z", "u", "v", "w")


def _binder_names(f: Formula) -> Iterator[str]:
    used = set(element_names(f)) | set(free_names(f))
    for n in _PRINT_NAMES:
        if n not in used:
            yield n
    i = 1
    while True:
        for base in _PRINT_NAMES:
            n = f"{base}{i}"
            if n not in used:
                yield n
        i += 1


@lru_cache(maxsize=None)
def format_formula(f: Formula) -> str:
    """Minimal-parentheses text form; `parse_formula` inverts it."""
    taken: list[str] = []

    def pick_name() -> str:
        return next(n for n in _binder_names(f) if n not in taken)

    # levels: 0 formula, 1 disjunct, 2 conjunct, 3 unary operand
    def go(g: Formula, level: int) -> str:
        if isinstance(g, Bottom):
            return "false"
        if isinstance(g, Atom):
            if not g.args:
                return g.pred
            return f"{g.pred}({', '.join(term(a) for a in g.args)})"
        if isinstance(g, Impl) and isinstance(g.right, Bottom):
            return f"~{go(g.left, 3)}"
        if isinstance(g, Impl):
            s = f"{go(g.left, 1)} -> {go(g.right, 0)}"
            return f"({s})" if level > 0 else s
        if isinstance(g, Or):
            s = f"{go(g.left, 1)} | {go(g.right, 2)}"
            return f"({s})" if level > 1 else s
        if isinstance(g, And):
            s = f"{go(g.left, 2)} & {go(g.right, 3)}"
            return f"({s})" if level > 2 else s
        name = pick_name()
        taken.append(name)
        word = "forall" if isinstance(g, Forall) else "exists"
        s = f"{word} {name}. {go(g.body, 0)}"
        taken.pop()
        return f"({s})" if level > 0 else s

    def term(t: Term) -> str:
        if isinstance(t, Var):
            return taken[len(taken) - 1 - t.index]
        return t.name

    return go(f, 0)


# ---------------------------------------------------------------------------
# instantiated-subformula closure

_TEMPLATE_PREFIX = "?"


def subformula_templates(f: Formula) -> frozenset[Formula]:
    """All subformulas of `f` with binders opened by synthetic free
    variables ?0, ?1, ... (one per binder depth)."""
    out: set[Formula] = set()

    def walk(g: Formula, depth: int) -> None:
        out.add(g)
        if isinstance(g, (Forall, Exists)):
            walk(open_binder(g.body, Free(f"{_TEMPLATE_PREFIX}{depth}")), depth + 1)
        else:
            for c in children(g):
                walk(c, depth)

    walk(f, 0)
    return frozenset(out)


@dataclass(frozen=True)
class ClosureSet:
    """Every instantiated subformula of `gamma` over the elements `delta`:
    substitute the free variables of each subformula template with
    elements of `delta` in all ways.  Members are closed and canonically
    ordered; enlarging `delta` never removes members."""
    gamma: frozenset[Formula]
    delta: tuple[str, ...]
    members: tuple[Formula, ...]
    members_set: frozenset[Formula] = field(repr=False)
    templates: tuple[Formula, ...] = field(repr=False, compare=False)

    def __contains__(self, f: Formula) -> bool:
        return f in self.members_set

    def with_delta(self, delta: Sequence[str]) -> "ClosureSet":
        """Recompute for a larger element set; existing instances are kept,
        only new ones are added."""
        if tuple(delta) == self.delta:
            return self
        if not set(self.delta) <= set(delta):
            raise FormulaError("delta may only grow")
        return _close(self.gamma, tuple(delta), self.templates)


def _close(gamma: frozenset[Formula], delta: tuple[str, ...],
           templates: tuple[Formula, ...]) -> ClosureSet:
    members: set[Formula] = set()
    for t in templates:
        fv = sorted(free_names(t), key=lambda n: int(n[1:]))
        if not fv:
            members.add(t)
            continue
        if not delta:
            continue
        for combo in product(delta, repeat=len(fv)):
            members.add(subst_frees(t, dict(zip(fv, map(Elem, combo)))))
    ordered = tuple(sorted(members, key=canonical_key))
    return ClosureSet(gamma, delta, ordered, frozenset(ordered), templates)


def subformula_closure(gamma: Iterable[Formula],
                       delta: Sequence[str] = ()) -> ClosureSet:
    gamma_set = frozenset(gamma)
    for g in gamma_set:
        if not is_closed(g):
            raise FormulaError(f"open formula in gamma: {g}")
    templates: set[Formula] = set()
    for g in gamma_set:
        templates |= subformula_templates(g)
    ordered_templates = tuple(sorted(templates, key=canonical_key))
    return _close(gamma_set, tuple(delta), ordered_templates)


def constants_of(formulas: Iterable[Formula]) -> tuple[str, ...]:
    """Sorted element names occurring in the given formulas."""
    names: set[str] = set()
    for f in formulas:
        names |= element_names(f)
    return tuple(sorted(names))
