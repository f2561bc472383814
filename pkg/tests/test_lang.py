import pytest
from hypothesis import given, strategies as st

from edg.lang import (
    Atom,
    ConflictMode,
    ConflictPolicy,
    Corpus,
    FormulaSyntaxError,
    NegatedAtom,
    NegatedRule,
    PositiveAtom,
    Rule,
    canonicalize,
    in_conflict,
    parse_corpus,
    parse_formula,
    parse_formula_set,
    predicates_of,
    related,
)

names = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True)
constants = st.one_of(names, st.integers(min_value=0, max_value=99))
flat_atoms = st.builds(
    Atom, names, st.tuples() | st.tuples(constants) | st.tuples(constants, constants)
)
atoms = st.builds(
    Atom,
    names,
    st.lists(st.one_of(constants, flat_atoms), min_size=0, max_size=3).map(tuple),
)
literals = st.one_of(st.builds(PositiveAtom, atoms), st.builds(NegatedAtom, atoms))
rules = st.builds(
    Rule, st.lists(literals, min_size=1, max_size=4).map(tuple), atoms
)
formulas = st.one_of(literals, rules, st.builds(NegatedRule, rules))


@given(formulas)
def test_render_parse_round_trip(formula):
    assert parse_formula(formula.render()) == canonicalize(formula)


@given(formulas)
def test_canonicalize_idempotent(formula):
    once = canonicalize(formula)
    assert canonicalize(once) == once


@given(formulas, formulas)
def test_related_symmetric(a, b):
    assert related(a, b) == related(b, a)


@given(formulas)
def test_related_reflexive(formula):
    assert related(formula, formula)


@given(formulas, formulas)
def test_conflict_symmetric_negation_only(a, b):
    policy = ConflictPolicy()
    assert in_conflict(a, b, policy) == in_conflict(b, a, policy)


@given(formulas)
def test_conflict_irreflexive(formula):
    assert not in_conflict(formula, formula, ConflictPolicy())


@given(atoms)
def test_negation_conflicts(atom):
    assert in_conflict(PositiveAtom(atom), NegatedAtom(atom), ConflictPolicy())


def test_exclusion_group_conflicts():
    a, b, c = Atom("dx", ("flu",)), Atom("dx", ("cold",)), Atom("dx", ("none",))
    policy = ConflictPolicy(
        mode=ConflictMode.NEGATION_PLUS_EXCLUSION_GROUPS,
        exclusion_groups=(frozenset({a, b}),),
    )
    assert in_conflict(PositiveAtom(a), PositiveAtom(b), policy)
    assert not in_conflict(PositiveAtom(a), PositiveAtom(c), policy)
    # groups only bite in the group-aware mode
    assert not in_conflict(
        PositiveAtom(a),
        PositiveAtom(b),
        ConflictPolicy(exclusion_groups=(frozenset({a, b}),)),
    )


def test_exclusion_groups_validated():
    a, b = Atom("x"), Atom("y")
    with pytest.raises(ValueError):
        ConflictPolicy(exclusion_groups=(frozenset({a}),))
    with pytest.raises(ValueError):
        ConflictPolicy(
            exclusion_groups=(frozenset({a, b}), frozenset({b, Atom("z")}))
        )


def test_nesting_capped_at_one_level():
    inner = Atom("f", ("x",))
    Atom("g", (inner,))  # fine
    with pytest.raises(ValueError):
        Atom("h", (Atom("g", (inner,)),))


def test_conjunctive_consequent_splits():
    got = parse_formula_set("a & b -> c & d")
    assert len(got) == 2
    assert {f.consequent.predicate for f in got} == {"c", "d"}
    with pytest.raises(FormulaSyntaxError):
        parse_formula("a & b -> c & d")


def test_parse_rejects_garbage():
    for bad in ("", "->", "a ->", "(a", "a & -> b", "Upper(x) -"):
        with pytest.raises(FormulaSyntaxError):
            parse_formula_set(bad)


def test_predicates_include_nested():
    # bare names in argument position are constants, not predicates
    f = parse_formula("has(symptom(fever)) -> dx(flu)")
    assert predicates_of(f) == {"has", "symptom", "dx"}


def test_zero_arg_term_is_a_constant():
    assert Atom("g", (Atom("x"),)) == Atom("g", ("x",))


CORPUS = """
# two ids, one splitting into two rules
h1: temp(high) @observation
f1: temp(high) -> dx(flu) & alert(ward) @rule
d1: dx(flu) @verdict
"""


def test_corpus_expand_and_negation():
    corpus = parse_corpus(CORPUS)
    assert corpus.ids == ("h1", "f1", "d1")
    assert len(corpus.formulas("f1")) == 2
    assert corpus.expand(["h1", "d1"]) == {
        parse_formula("temp(high)"),
        parse_formula("dx(flu)"),
    }
    with pytest.raises(KeyError):
        corpus.expand(["nope"])
    with pytest.raises(KeyError):
        corpus.formulas("!f1")  # two rules, so negation is ambiguous
    neg = parse_corpus("f2: a -> b @rule").formulas("!f2")
    assert len(neg) == 1 and neg[0].render() == "!(a -> b)"


def test_corpus_label_round_trip():
    corpus = parse_corpus(CORPUS)
    for ident in corpus.ids:
        for formula in corpus.formulas(ident):
            assert corpus.label_for(formula) == ident
    assert corpus.label_for(parse_formula("unknown")) is None


def test_corpus_duplicate_id_rejected():
    with pytest.raises(ValueError):
        parse_corpus("h1: a @fact\nh1: b @fact")


def test_corpus_bad_lines_rejected():
    with pytest.raises(FormulaSyntaxError):
        parse_corpus("h1 temp(high) @observation")
    with pytest.raises(FormulaSyntaxError):
        parse_corpus("h1: temp(high) @nonsense")
