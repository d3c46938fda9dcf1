import pytest
from hypothesis import given, settings, strategies as st

from provgame.formula import (
    BOT, And, Atom, ClosureSet, Elem, Exists, Forall, FormulaError, Free,
    Impl, Or, ParseError, Signature, SignatureError, Var, canonical_key,
    constants_of, element_names, format_formula, free_names, instantiate,
    is_closed, neg, open_binder, parse_formula, parse_inferred,
    parse_signature, subformula_closure,
)

SIG = Signature({"P": 1, "Q": 2, "R": 0}, ("c", "d"))


def P(t):
    return Atom("P", (t,))


# ---------------------------------------------------------------------------
# parsing

def test_parse_quantifier_nesting():
    f = parse_formula("forall y. exists x. (P(x) -> P(y))", SIG)
    assert f == Forall(Exists(Impl(P(Var(0)), P(Var(1)))))


def test_parse_negation_sugar():
    assert parse_formula("~P(c)", SIG) == Impl(P(Elem("c")), BOT)


def test_parse_arity_mismatch():
    with pytest.raises(ParseError):
        parse_formula("P(c,d)", SIG)


def test_parse_unknown_predicate():
    with pytest.raises(ParseError):
        parse_formula("S(c)", SIG)


def test_parse_unbound_variable():
    with pytest.raises(ParseError):
        parse_formula("P(x)", SIG)
    f = parse_formula("P(x)", SIG, allow_free=True)
    assert f == P(Free("x"))


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse_formula("P(c) -> ->", SIG)
    assert exc.value.position == 8


def test_precedence_and_associativity():
    f = parse_formula("~P(c) & R | R -> R -> false", SIG)
    want = Impl(
        Or(And(neg(P(Elem("c"))), Atom("R")), Atom("R")),
        Impl(Atom("R"), BOT),
    )
    assert f == want


def test_quantifier_body_extends_right():
    f = parse_formula("R & forall x. P(x) -> R", SIG)
    assert f == And(Atom("R"), Forall(Impl(P(Var(0)), Atom("R"))))


def test_alpha_equivalence_is_structural_equality():
    f = parse_formula("forall x. P(x)", SIG)
    g = parse_formula("forall y. P(y)", SIG)
    assert f == g


def test_shadowing():
    f = parse_formula("forall x. (P(x) & forall x. P(x))", SIG)
    assert f == Forall(And(P(Var(0)), Forall(P(Var(0)))))


def test_parse_game_elements():
    f = parse_formula("P(α1)", SIG, extra_elements=("α1",))
    assert f == P(Elem("α1"))


def test_parse_inferred_signature():
    [f, g], sig = parse_inferred(["P(c) | ~P(c)", "Q(c, e) -> R"])
    assert sig.predicates == {"P": 1, "Q": 2, "R": 0}
    assert sig.constants == ("c", "e")
    assert g == Impl(Atom("Q", (Elem("c"), Elem("e"))), Atom("R"))


def test_signature_file_round_trip():
    sig = parse_signature("pred P/2\nconst c\n# comment\npred R/0\n")
    assert sig.predicates == {"P": 2, "R": 0}
    assert sig.constants == ("c",)
    with pytest.raises(SignatureError):
        parse_signature("pred ~oops/1")
    with pytest.raises(SignatureError):
        Signature({"P": 1}, ("P",))


# ---------------------------------------------------------------------------
# printing / round trip

FORMULA_TEXTS = [
    "false",
    "R",
    "P(c)",
    "Q(c, d)",
    "~P(c)",
    "~~P(c) -> P(c)",
    "P(c) | ~P(c)",
    "P(c) -> P(c) -> R",
    "(P(c) -> P(c)) -> R",
    "P(c) & (R | P(d))",
    "forall x. exists y. (P(x) -> P(y))",
    "(forall x. ((P(x) -> forall x. P(x)) -> forall x. P(x))) -> forall x. P(x)",
    "~(forall x. P(x))",
    "exists x. (P(x) & Q(x, c))",
]


@pytest.mark.parametrize("text", FORMULA_TEXTS)
def test_round_trip_examples(text):
    f = parse_formula(text, SIG)
    assert parse_formula(format_formula(f), SIG) == f


def formula_strategy():
    terms = st.sampled_from([Elem("c"), Elem("d")])
    atoms = st.one_of(
        st.just(BOT),
        st.just(Atom("R")),
        st.builds(lambda t: Atom("P", (t,)), terms),
        st.builds(lambda a, b: Atom("Q", (a, b)), terms, terms),
    )

    def extend(children):
        def bind(q):
            # rebind a random element occurrence via a quantifier
            def quantify(f):
                opened = f
                if isinstance(opened, Atom) and opened.args:
                    args = tuple(
                        Var(0) if isinstance(a, Elem) and a.name == "c" else a
                        for a in opened.args)
                    opened = Atom(opened.pred, args)
                return q(opened)
            return st.builds(quantify, children)

        return st.one_of(
            st.builds(Impl, children, children),
            st.builds(And, children, children),
            st.builds(Or, children, children),
            bind(Forall),
            bind(Exists),
        )

    return st.recursive(atoms, extend, max_leaves=8)


@given(formula_strategy())
@settings(max_examples=200)
def test_round_trip_property(f):
    assert parse_formula(format_formula(f), SIG) == f


# ---------------------------------------------------------------------------
# instantiation

def test_instantiate_single_substitution():
    f = parse_formula("P(x) -> P(y)", SIG, allow_free=True)
    assert instantiate(f, "x", "c") == Impl(P(Elem("c")), P(Free("y")))


def test_instantiate_under_binder():
    f = parse_formula("exists x. (P(x) -> P(y))", SIG, allow_free=True)
    want = parse_formula("exists x. (P(x) -> P(c))", SIG)
    assert instantiate(f, "y", "c") == want


def test_instantiate_with_game_element():
    f = parse_formula("P(x)", SIG, allow_free=True)
    assert instantiate(f, "x", "α1") == P(Elem("α1"))


def test_instantiate_var_not_free():
    f = parse_formula("P(c)", SIG)
    with pytest.raises(FormulaError):
        instantiate(f, "x", "c")


def test_open_binder_shifts_outer_indices():
    f = parse_formula("forall y. exists x. (P(x) -> P(y))", SIG)
    opened = open_binder(f.body, Free("?0"))
    assert opened == Exists(Impl(P(Var(0)), P(Free("?0"))))


# ---------------------------------------------------------------------------
# closure

def closure_texts(gamma_texts, delta):
    gamma = [parse_formula(t, SIG) for t in gamma_texts]
    return subformula_closure(gamma, delta)


def member_texts(c: ClosureSet) -> set[str]:
    return {format_formula(m) for m in c.members}


def test_closure_empty_delta():
    c = closure_texts(["forall y. exists x. (P(x) -> P(y))"], ())
    assert member_texts(c) == {"forall x. exists y. P(y) -> P(x)"}


def test_closure_singleton_delta():
    c = closure_texts(["forall y. exists x. (P(x) -> P(y))"], ("c",))
    assert member_texts(c) == {
        "forall x. exists y. P(y) -> P(x)",
        "exists x. P(x) -> P(c)",
        "P(c) -> P(c)",
        "P(c)",
    }


def test_closure_bottom():
    c = closure_texts(["false"], ("c", "d"))
    assert c.members == (BOT,)


def test_closure_rejects_open_gamma():
    with pytest.raises(FormulaError):
        subformula_closure([parse_formula("P(x)", SIG, allow_free=True)], ())


def test_closure_members_closed_and_within_delta():
    c = closure_texts(
        ["forall y. exists x. (Q(x, y) -> P(y))", "~P(c)"], ("c", "α1"))
    for m in c.members:
        assert is_closed(m)
        assert element_names(m) <= {"c", "α1"}


def test_closure_incremental_matches_recompute():
    base = closure_texts(["forall y. exists x. (P(x) -> P(y))"], ("c",))
    grown = base.with_delta(("c", "α1"))
    again = closure_texts(["forall y. exists x. (P(x) -> P(y))"], ("c", "α1"))
    assert grown.members == again.members
    assert set(base.members) <= set(grown.members)


# independent re-derivation: enumerate subformulas, then substitute free
# variables one at a time in every order.
def brute_closure(gamma, delta):
    subs = set()

    def all_subformulas(f, counter=[0]):
        subs.add(f)
        if isinstance(f, (Impl, And, Or)):
            all_subformulas(f.left)
            all_subformulas(f.right)
        elif isinstance(f, (Forall, Exists)):
            counter[0] += 1
            all_subformulas(open_binder(f.body, Free(f"v{counter[0]}")))

    for g in gamma:
        all_subformulas(g)

    members = set()
    frontier = set(subs)
    while frontier:
        f = frontier.pop()
        fv = free_names(f)
        if not fv:
            members.add(f)
            continue
        for v in fv:
            for e in delta:
                frontier.add(instantiate(f, v, e))
    return members


GAMMA_POOL = [
    "forall y. exists x. (P(x) -> P(y))",
    "~P(c) -> ~(exists x. P(x))",
    "forall x. (P(x) | Q(x, d))",
    "P(c) & R",
    "false",
]


@given(
    gamma=st.lists(st.sampled_from(GAMMA_POOL), min_size=0, max_size=3),
    delta=st.lists(st.sampled_from(["c", "d", "α1"]), unique=True, max_size=3),
)
@settings(max_examples=60, deadline=None)
def test_closure_agrees_with_brute_force(gamma, delta):
    gamma_f = [parse_formula(t, SIG, extra_elements=("α1",)) for t in gamma]
    c = subformula_closure(gamma_f, tuple(delta))
    assert set(c.members) == brute_closure(gamma_f, tuple(delta))


@given(
    gamma=st.lists(st.sampled_from(GAMMA_POOL), min_size=1, max_size=3),
    delta_small=st.lists(st.sampled_from(["c", "d"]), unique=True, max_size=2),
    extra=st.lists(st.sampled_from(["α1", "α2"]), unique=True, max_size=2),
)
@settings(max_examples=60, deadline=None)
def test_closure_monotone_in_delta(gamma, delta_small, extra):
    gamma_f = [parse_formula(t, SIG) for t in gamma]
    small = subformula_closure(gamma_f, tuple(delta_small))
    big = subformula_closure(gamma_f, tuple(delta_small) + tuple(extra))
    assert set(small.members) <= set(big.members)


def test_closure_deterministic_order():
    c1 = closure_texts(GAMMA_POOL, ("c", "d"))
    c2 = closure_texts(list(reversed(GAMMA_POOL)), ("c", "d"))
    assert c1.members == c2.members
    assert c1.members == tuple(sorted(c1.members, key=canonical_key))


def test_constants_of():
    f = parse_formula("Q(c, d) -> P(α1)", SIG, extra_elements=("α1",))
    assert constants_of([f]) == ("c", "d", "α1")
