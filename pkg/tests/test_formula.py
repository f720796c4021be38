import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kripkecells import FormulaError
from kripkecells.formula import (And, Know, Not, Prop, Workspace, depth, disj, e_power,
                                 everybody_knows, implies, parse, render, top)

from conftest import formulas

SPACE = Workspace(1, 2)


def test_parse_knowledge():
    assert parse("K0 p0", SPACE) is Know(0, Prop(0))


def test_parse_everybody_knows_expands():
    assert parse("E p0", SPACE) == And(Know(0, Prop(0)), Know(1, Prop(0)))


def test_parse_nested_negation():
    expected = Not(And(Prop(0), Know(1, Not(Prop(0)))))
    assert parse("!(p0 & K1 !p0)", SPACE) is expected


def test_derived_connectives_expand():
    a, b = Prop(0), Know(0, Prop(0))
    assert parse("p0 | K0 p0", SPACE) is Not(And(Not(a), Not(b)))
    assert parse("p0 -> K0 p0", SPACE) is implies(a, b)


def test_precedence_and_associativity():
    p = Prop(0)
    assert parse("p0 -> p0 -> p0", SPACE) is implies(p, implies(p, p))
    assert parse("p0 & p0 | p0", SPACE) is disj([And(p, p), p])
    assert parse("!K0 p0", SPACE) is Not(Know(0, p))
    assert parse("K0 !p0 & p0", SPACE) is And(Know(0, Not(p)), p)


@pytest.mark.parametrize("text, position, fragment", [
    ("p1", 0, "unknown atom"),
    ("K0 K2 p0", 3, "unknown agent"),
    ("(p0 & p0", 0, "unbalanced"),
    ("p0)", 2, "unbalanced"),
    ("p0 # p0", 3, "unexpected character"),
    ("p0 &", 4, "end of input"),
])
def test_parse_errors_carry_positions(text, position, fragment):
    with pytest.raises(FormulaError) as info:
        parse(text, SPACE)
    assert info.value.position == position
    assert fragment in info.value.message


def test_depth_examples():
    p = Prop(0)
    assert depth(p) == 0
    assert depth(Know(0, p)) == 1
    assert depth(And(Know(0, p), Know(1, Know(0, p)))) == 2
    assert depth(Not(Know(1, p))) == 1


def test_e_power():
    p = Prop(0)
    assert e_power(p, 0, 2) is p
    assert e_power(p, 1, 2) is And(Know(0, p), Know(1, p))
    assert depth(e_power(Know(0, p), 2, 2)) == 3
    assert e_power(p, 2, 3) is everybody_knows(everybody_knows(p, 3), 3)


def _know_chains(f):
    """Root-to-leaf agent sequences through And nodes, for a fully expanded E^n."""
    if isinstance(f, And):
        return _know_chains(f.left) + _know_chains(f.right)
    if isinstance(f, Know):
        return [(f.agent,) + c for c in _know_chains(f.sub)]
    return [()]


@pytest.mark.parametrize("agents", [1, 2, 3])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_e_power_has_all_know_chains(agents, n):
    chains = _know_chains(e_power(Prop(0), n, agents))
    assert len(chains) == agents ** n
    assert len(set(chains)) == agents ** n


def test_render_examples():
    assert render(Prop(0)) == "p0"
    assert render(Know(1, Not(Prop(0)))) == "K1 !p0"
    assert render(top()) == "p0 | !p0"
    assert render(parse("E p0", SPACE), 2) == "E p0"
    assert render(parse("p0 -> (K0 p0 -> p0)", SPACE)) == "p0 -> K0 p0 -> p0"
    assert render(parse("(p0 | K0 p0) & p0", SPACE)) == "(p0 | K0 p0) & p0"
    # !(a & !b) with a = !(c & !d) is also !(!x & !y); the disjunction reading wins
    f = parse("(p0 -> p0) -> p0", SPACE)
    assert render(f) == "p0 & !p0 | p0"
    assert parse(render(f), SPACE) is f


def test_interning_is_structural():
    assert Know(0, Prop(0)) is Know(0, Prop(0))
    assert hash(And(Prop(0), Prop(0))) == hash(And(Prop(0), Prop(0)))


@settings(max_examples=1000)
@given(formulas(num_props=2, num_agents=3, max_depth=4))
def test_render_parse_round_trip(f):
    space = Workspace(2, 3)
    assert parse(render(f), space) is f
    assert parse(render(f, 3), space) is f


@given(formulas(max_depth=3), st.integers(0, 1))
def test_know_adds_one_to_depth(f, j):
    assert depth(Know(j, f)) == depth(f) + 1
