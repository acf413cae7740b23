import pytest
from hypothesis import given, strategies as st

from conftest import kb_of
from kgp.constraints import Con
from kgp.errors import InconsistentObservation, UnknownNode, ValidationError
from kgp.scenario import build, load_scenario, scenario_path
from kgp.state import (
    ACTION,
    Node,
    achieved,
    check_wellformed,
    fresh_time_var,
    initial_state,
    navigate,
    root_of,
    timed_out,
)
from kgp.syntax import parse_term
from kgp.terms import Fn, TVar

T1, T2, T3 = TVar(1), TVar(2), TVar(3)


def _forest():
    kb = kb_of("", "a", fluents={("g", 0): "mental", ("h", 0): "mental", ("k", 0): "mental"}, actions={("go", 0): "physical"})
    nodes = [
        Node(1, Fn("g")),
        Node(2, Fn("h"), parent=1),
        Node(3, Fn("go"), ACTION, parent=1),
        Node(4, Fn("k"), parent=2),
    ]
    return initial_state(kb, nodes=nodes, c=[Con("<", T1, 20)])


def test_navigation():
    s = _forest()
    assert navigate(s, 1, "children") == {2, 3}
    assert navigate(s, 4, "ancestors") == {1, 2}
    assert navigate(s, 2, "siblings") == {3}
    assert navigate(s, 1, "descendants") == {2, 3, 4}
    assert navigate(s, 4, "parent") == {2}
    assert navigate(s, 3, "leaf") and not navigate(s, 2, "leaf")
    assert root_of(s, 4).id == 1
    with pytest.raises(UnknownNode):
        navigate(s, 9, "parent")
    with pytest.raises(ValueError):
        navigate(s, 1, "cousins")


def test_wellformed_forest_passes():
    check_wellformed(_forest())


@pytest.mark.parametrize(
    "nodes",
    [
        [Node(1, Fn("g")), Node(1, Fn("h"))],
        [Node(1, Fn("g")), Node(2, Fn("h"), parent=7)],
        [Node(1, Fn("go"), ACTION), Node(2, Fn("h"), parent=1)],
        [Node(1, Fn("g")), Node(2, Fn("h"), parent=1, reactive=True)],
    ],
)
def test_malformed_forests_rejected(nodes):
    kb = kb_of("", "a", fluents={("g", 0): "mental", ("h", 0): "mental"}, actions={("go", 0): "physical"})
    with pytest.raises(ValidationError):
        check_wellformed(initial_state(kb, nodes=nodes))


def test_unsatisfiable_store_rejected():
    s = initial_state(kb_of("", "a"), c=[Con("<", T1, 5)], sigma=[(T1, 9)])
    with pytest.raises(ValidationError):
        check_wellformed(s)


def test_rebinding_rejected():
    s = initial_state(kb_of("", "a"), sigma=[(T1, 4)])
    assert s.bind([(T1, 4)]) == s
    with pytest.raises(ValidationError):
        s.bind([(T1, 5)])


def test_contradicting_observations_rejected():
    s = initial_state(kb_of("", "a", fluents={("f", 0): "mental"}))
    s = s.add_kb0([parse_term("observed(f, 3)")])
    with pytest.raises(InconsistentObservation):
        s.add_kb0([parse_term("observed(¬f, 3)")])
    with pytest.raises(ValidationError):
        s.add_kb0([parse_term("observed(f, T)")])


@given(st.integers(0, 8))
def test_fresh_ids_increase(k):
    s = _forest()
    seen = [n.id for n in s.nodes]
    for _ in range(k):
        v, s = fresh_time_var(s)
        assert v.id > max(seen)
        seen.append(v.id)


def test_achieved_after_express_delivery():
    agents, env, _ = build(load_scenario(scenario_path("setting3")))
    s = agents[0].state
    assert not achieved(s, Fn("have", (Fn("ticket"),)), T1, 8)
    s = s.add_kb0([parse_term("observed(mus, ehd[5], 6)")])
    assert achieved(s, Fn("have", (Fn("ticket"),)), T1, 8)
    # the delivery at 5 makes have(ticket) hold from 6 only
    assert not achieved(s, Fn("have", (Fn("ticket"),)), T1, 5)


def test_timed_out():
    s = _forest()
    assert not timed_out(s, T1, 18)
    assert timed_out(s, T1, 19)
    assert timed_out(s.bind([(T2, 4)]), T2, 4)
