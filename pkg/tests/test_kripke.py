import pytest

from provgame.formula import (
    Atom, Elem, Signature, parse_formula, parse_inferred, subformula_closure,
)
from provgame.kripke import (
    ALL_CLASS_TAGS, EnumerationLimitError, KripkeError, KripkeModel,
    ModelError, classify, cone, enumerate_models, find_countermodel,
    force_set, forces, load_model, save_model, validate_model,
)
from naive_forcing import naive_forces

SIG = Signature({"P": 1}, ("c",))


def parse(text, sig=SIG, **kw):
    return parse_formula(text, sig, **kw)


def chain_model(atoms_w1=("P(d)",)):
    """w0 < w1 with domains {c} and {c,d}."""
    return load_model(
        "worlds: [w0, w1]\n"
        "order: [[w0, w1]]\n"
        "domain: {w0: [c], w1: [c, d]}\n"
        "atoms: {w1: [" + ", ".join(repr(a) for a in atoms_w1) + "]}\n")


def two_world_p_c():
    """w0 < w1, P(c) true only at w1."""
    return load_model(
        "worlds: [w0, w1]\n"
        "order: [[w0, w1]]\n"
        "domain: {w0: [c], w1: [c]}\n"
        "atoms: {w1: ['P(c)']}\n")


# ---------------------------------------------------------------------------
# validation

def test_validate_monotone_chain_ok():
    assert validate_model(chain_model()) == []


def test_validate_rejects_nonmonotone_valuation():
    m = KripkeModel(
        worlds=("w0", "w1"),
        order=frozenset({("w0", "w0"), ("w1", "w1"), ("w0", "w1")}),
        domain={"w0": ("c",), "w1": ("c",)},
        atoms={"w0": frozenset({Atom("P", (Elem("c"),))}), "w1": frozenset()},
    )
    assert any("valuation not monotone" in v for v in validate_model(m))


def test_validate_rejects_atom_outside_domain():
    m = KripkeModel(
        worlds=("w0",),
        order=frozenset({("w0", "w0")}),
        domain={"w0": ("c",)},
        atoms={"w0": frozenset({Atom("P", (Elem("d"),))})},
    )
    assert any("outside the domain" in v for v in validate_model(m))


def test_validate_rejects_empty_domain_unless_tolerant():
    m = KripkeModel(
        worlds=("w0",), order=frozenset({("w0", "w0")}),
        domain={"w0": ()}, atoms={"w0": frozenset()})
    assert any("empty domain" in v for v in validate_model(m))
    tolerant = KripkeModel(
        worlds=("w0",), order=frozenset({("w0", "w0")}),
        domain={"w0": ()}, atoms={"w0": frozenset()},
        allow_empty_domains=True)
    assert validate_model(tolerant) == []


def test_validate_rejects_noninjective_interpretation():
    m = KripkeModel(
        worlds=("w0",), order=frozenset({("w0", "w0")}),
        domain={"w0": ("e",)}, atoms={"w0": frozenset()},
        interpretation={"c": "e", "d": "e"})
    assert any("not injective" in v for v in validate_model(m))


# ---------------------------------------------------------------------------
# forcing

def test_excluded_middle_fails_at_root():
    m = two_world_p_c()
    assert not forces(m, "w0", parse("P(c) | ~P(c)"))
    assert forces(m, "w1", parse("P(c) | ~P(c)"))


def test_trivial_implication_everywhere():
    m = two_world_p_c()
    for w in m.worlds:
        assert forces(m, w, parse("false -> false"))


def test_double_negation_gap():
    m = two_world_p_c()
    assert forces(m, "w1", parse("~~P(c)"))
    assert forces(m, "w0", parse("~~P(c)"))
    assert not forces(m, "w0", parse("P(c)"))
    assert not forces(m, "w0", parse("~~P(c) -> P(c)"))


def test_forcing_needs_interpreted_elements():
    m = two_world_p_c()
    with pytest.raises(KripkeError):
        forces(m, "w0", parse("P(d)", Signature({"P": 1}, ("d",))))


def test_quantifiers_over_growing_domains():
    m = chain_model()
    assert forces(m, "w1", parse("exists x. P(x)"))
    assert not forces(m, "w0", parse("exists x. P(x)"))
    assert not forces(m, "w0", parse("forall x. P(x)"))


def test_interpretation_resolution():
    m = KripkeModel(
        worlds=("w0",), order=frozenset({("w0", "w0")}),
        domain={"w0": ("e1",)},
        atoms={"w0": frozenset({Atom("P", (Elem("e1"),))})},
        interpretation={"c": "e1"})
    assert validate_model(m) == []
    assert forces(m, "w0", parse("P(c)"))


def test_cone_restricts_to_upper_set():
    m = two_world_p_c()
    c = cone(m, "w1")
    assert c.worlds == ("w1",)
    assert forces(c, "w1", parse("P(c)"))


def test_classify_all_tags():
    rep = classify(two_world_p_c())
    assert rep.finite_worlds and rep.finite_domains
    assert rep.member_of == ALL_CLASS_TAGS


# ---------------------------------------------------------------------------
# enumeration

def count_models(sig, bounds, **kw):
    return sum(1 for _ in enumerate_models(sig, bounds, **kw))


def test_enumerate_single_world_singleton_domain():
    sig = Signature({"P": 1})
    assert count_models(sig, (1, 1)) == 2
    assert count_models(sig, (1, 1), allow_empty_domains=True) == 3


def test_enumerate_single_world_empty_domain():
    sig = Signature({"P": 1})
    assert count_models(sig, (1, 0), allow_empty_domains=True) == 1
    assert count_models(sig, (1, 0)) == 0


def test_enumerate_contains_excluded_middle_countermodel():
    sig = Signature({"P": 0})
    [phi], _ = parse_inferred(["P | ~P"])
    hits = [
        m for m in enumerate_models(sig, (2, 1))
        if len(m.worlds) == 2 and frozenset(m.worlds) != force_set(m, phi)
    ]
    assert hits, "expected the two-world countermodel in the stream"


def test_enumerate_deterministic():
    sig = Signature({"P": 1}, ("c",))
    a = [save_model(m) for m in enumerate_models(sig, (2, 2))]
    b = [save_model(m) for m in enumerate_models(sig, (2, 2))]
    assert a == b
    assert len(a) == len(set(a)), "stream must not repeat models"


def test_enumerate_all_valid():
    sig = Signature({"P": 1}, ("c",))
    for m in enumerate_models(sig, (3, 2)):
        assert validate_model(m) == []


def test_enumeration_ceiling():
    sig = Signature({"P": 2})
    with pytest.raises(EnumerationLimitError):
        count_models(sig, (2, 12))


def test_forcing_monotone_on_enumerated_models():
    sig = Signature({"P": 1}, ("c",))
    phi = parse("forall x. (P(x) | ~P(x))")
    closure = subformula_closure([phi, parse("~~P(c) -> P(c)")], ("c",))
    for m in enumerate_models(sig, (3, 2)):
        for f in closure.members:
            t = force_set(m, f)
            for (a, b) in m.order:
                assert a not in t or b in t, (save_model(m), str(f))


def test_forces_agrees_with_naive_oracle():
    sig = Signature({"P": 1}, ("c",))
    gamma = [parse("~P(c) -> ~(exists x. P(x))"),
             parse("forall y. exists x. (P(x) -> P(y))")]
    from provgame.formula import element_names
    checked = 0
    for m in enumerate_models(sig, (2, 2)):
        closure = subformula_closure(gamma, m.domain[m.worlds[0]])
        for f in closure.members:
            for w in m.worlds:
                if not element_names(f) <= set(m.domain[w]):
                    continue  # forcing precondition: elements interpreted at w
                assert forces(m, w, f) == naive_forces(m, w, f)
                checked += 1
    assert checked > 1000


# ---------------------------------------------------------------------------
# countermodel search

def test_countermodel_excluded_middle():
    phi = parse("P(c) | ~P(c)")
    found = find_countermodel([], phi, (2, 1))
    assert found is not None
    m, root = found
    assert len(m.worlds) == 2
    assert not forces(m, root, phi)


def test_countermodel_premise_equals_goal():
    phi = parse("P(c)")
    assert find_countermodel([phi], phi, (3, 2)) is None


def test_countermodel_none_for_valid_formula():
    phi = parse("forall y. exists x. (P(x) -> P(y))")
    assert find_countermodel([], phi, (2, 2)) is None


def test_countermodel_search_is_minimal_first():
    phi = parse("~~P(c) -> P(c)")
    m, root = find_countermodel([], phi, (3, 2))
    assert len(m.worlds) == 2
    assert max(len(m.domain[w]) for w in m.worlds) == 1


def test_countermodel_respects_premises():
    prem = parse("exists x. P(x)")
    phi = parse("forall x. P(x)")
    m, root = find_countermodel([prem], phi, (2, 2))
    for w in m.worlds:
        assert forces(m, w, prem)
    assert not forces(m, root, phi)


# ---------------------------------------------------------------------------
# files

def test_model_file_round_trip():
    m = chain_model()
    again = load_model(save_model(m))
    assert save_model(again) == save_model(m)
    assert again.order == m.order
    assert again.domain == m.domain
    assert again.atoms == m.atoms


def test_load_model_rejects_invalid():
    with pytest.raises(ModelError):
        load_model(
            "worlds: [w0, w1]\n"
            "order: [[w0, w1]]\n"
            "domain: {w0: [c], w1: [c]}\n"
            "atoms: {w0: ['P(c)']}\n")  # valuation not monotone


def test_load_model_computes_transitive_closure():
    m = load_model(
        "worlds: [w0, w1, w2]\n"
        "order: [[w0, w1], [w1, w2]]\n"
        "domain: {w0: [c], w1: [c], w2: [c]}\n"
        "atoms: {}\n")
    assert m.leq("w0", "w2")


def test_load_model_rejects_unknown_world_keys():
    with pytest.raises(ModelError):
        load_model(
            "worlds: [w0]\n"
            "order: []\n"
            "domain: {w0: [c], w9: [c]}\n"
            "atoms: {}\n")
