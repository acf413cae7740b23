import pytest
from hypothesis import given, strategies as st

from kgp.constraints import Con
from kgp.errors import ParseError
from kgp.lp import IC, Lit, Rule
from kgp.syntax import (
    Constraint,
    Directive,
    GoalRule,
    Located,
    Priority,
    Reactive,
    parse_body,
    parse_clauses,
    parse_term,
    print_clause,
)
from kgp.terms import AT, Add, Fn, TVar, Var, neg, render


def test_rule_forms():
    cs = parse_clauses(
        """
        % comment
        p(X) <- q(X), not r(X).
        a, b => c ; d.
        obs(X) => assume_happens(go(X), T) : T > 3.
        n(g, Tau) :: g[Tau] : Tau < 5 <- h.
        p1 :: n(a, _) > n(b, _) <- ok.
        τ1 < τ2 + 1.
        #fluent f/1 sensing.
        """
    )
    kinds = [type(c.item) if isinstance(c, Located) else type(c) for c in cs]
    assert kinds == [Rule, IC, Reactive, GoalRule, Priority, Constraint, Directive]
    r = cs[0].item
    assert r.body[1] == Lit(Fn("r", (Var("X"),)), True)
    assert cs[5].con == Con("<", TVar(1), Add(TVar(2), 1))


def test_timed_and_negated_terms():
    assert parse_term("¬have(x)") == neg(Fn("have", (Fn("x"),)))
    t = parse_term("have(x)[τ3]")
    assert t == Fn(AT, (Fn("have", (Fn("x"),)), TVar(3)))
    assert render(parse_term("¬have(x)[τ3]")) == "¬have(x)[τ3]"


def test_parse_error_reports_position_and_expected():
    with pytest.raises(ParseError) as e:
        parse_clauses("p(a).\nq(b) <- .")
    assert e.value.line == 2
    assert e.value.column is not None
    assert e.value.expected


def test_unexpected_character():
    with pytest.raises(ParseError):
        parse_term("p(§)")


def test_body_with_constraints():
    body = parse_body("holds_at(f, T), T >= 3, not g")
    assert body[1] == Con(">=", Var("T"), 3)
    assert body[2].naf


_names = st.sampled_from(["a", "b", "go", "tr01"])
_vars = st.sampled_from(["X", "Y", "T"]).map(Var)


def _terms():
    leaf = st.one_of(_names.map(Fn), _vars, st.integers(0, 30))
    return st.recursive(leaf, lambda sub: st.builds(lambda n, xs: Fn(n, tuple(xs)), _names, st.lists(sub, min_size=1, max_size=3)), max_leaves=6)


@given(_terms())
def test_term_print_parse_roundtrip(t):
    assert parse_term(render(t)) == t


@given(st.lists(_terms().filter(lambda t: isinstance(t, Fn)), min_size=1, max_size=3))
def test_rule_print_parse_roundtrip(atoms):
    head, *body = atoms
    r = Rule(head, tuple(Lit(b) for b in body))
    (c,) = parse_clauses(print_clause(r))
    assert c.item == r
