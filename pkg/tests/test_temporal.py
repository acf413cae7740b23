from types import SimpleNamespace

from hypothesis import given, settings, strategies as st

from conftest import SVS, kb_of
from kgp.constraints import Con, entails
from kgp.kb import AgentKB, Config
from kgp.lp import Rule
from kgp.syntax import parse_term
from kgp.temporal import effects, holds, holds_ground, preconditions
from kgp.terms import Fn, TVar, Var, neg, render

INFORM = parse_term("observed(co, tell(co, svs, inform(arrival(tr01), 18), d1)[15], 17)")
HAVE = parse_term("have_info(arrival(tr01), 18)")


def _svs(**cfg):
    return SimpleNamespace(kb=kb_of(SVS, "svs", horizon=40, **cfg), kb0=(INFORM,))


def test_no_info_before_the_inform():
    st_ = SimpleNamespace(kb=kb_of(SVS, "svs", horizon=40), kb0=(INFORM,))
    assert holds_ground(st_, parse_term("no_info(arrival(tr01))"), 10)
    assert not holds_ground(st_, parse_term("no_info(arrival(tr01))"), 20)


def test_have_info_after_20():
    t = TVar(1)
    w = holds(_svs(), HAVE, t, [Con(">", t, 20)])
    assert w == {t: 21}


def test_default_bridge_dates_inform_by_execution():
    # the inform executed at 15 makes have_info hold from 16
    t = TVar(1)
    assert holds(_svs(), HAVE, t, [Con("<", t, 17)]) == {t: 16}


def test_observation_time_bridge():
    t = TVar(1)
    st_ = _svs(unknown_action_time=True)
    assert holds(st_, HAVE, t, [Con("<", t, 17)]) is None
    assert holds(st_, HAVE, t, [Con(">", t, 17)]) == {t: 18}


def test_preconditions_and_effects():
    st_ = _svs()
    a = parse_term("tell(svs, psa, inform(arrival(tr01), 18), d)")
    t = TVar(3)
    assert preconditions(st_, a, t) == [(HAVE, t)]
    assert preconditions(st_, parse_term("tell(svs, psa, refuse(arrival(tr01)), d)"), t) == []
    e = effects(st_, parse_term("tell(co, svs, inform(arrival(tr01), 18), d1)"), 15)
    assert sorted(render(x) for x in e) == ["have_info(arrival(tr01), 18)", "¬no_info(arrival(tr01))"]


def test_observed_fluents_persist_until_contradicted():
    kb = AgentKB("a", config=Config(horizon=20))
    st_ = SimpleNamespace(kb=kb, kb0=(parse_term("observed(f, 2)"), parse_term("observed(¬f, 5)")))
    f = Fn("f")
    assert [holds_ground(st_, f, t) for t in range(8)] == [False, False, True, True, True, False, False, False]
    assert [holds_ground(st_, neg(f), t) for t in range(8)] == [False] * 5 + [True] * 3


def test_unknown_before_any_information():
    st_ = SimpleNamespace(kb=AgentKB("a", config=Config(horizon=10)), kb0=())
    assert not holds_ground(st_, Fn("f"), 3)
    assert not holds_ground(st_, neg(Fn("f")), 3)


# random consistent narratives

FLUENTS = [Fn("f"), Fn("g")]
ACTIONS = [Fn("a"), Fn("b"), Fn("c")]
_T = Var("T")


@st.composite
def narratives(draw):
    rules = []
    for a in ACTIONS:
        for f in FLUENTS:
            which = draw(st.sampled_from(["init", "term", "none"]))
            if which != "none":
                rules.append(Rule(Fn("initiates" if which == "init" else "terminates", (a, _T, f))))
    for f in FLUENTS:
        v = draw(st.sampled_from([True, False, None]))
        if v is not None:
            rules.append(Rule(Fn("initially", (f if v else neg(f),))))
    kb0 = []
    for t in sorted(draw(st.sets(st.integers(0, 28), max_size=6))):
        if draw(st.booleans()):
            kb0.append(Fn("executed", (draw(st.sampled_from(ACTIONS)), t)))
        else:
            f = draw(st.sampled_from(FLUENTS))
            kb0.append(Fn("observed", (f if draw(st.booleans()) else neg(f), t)))
    return rules, kb0


@settings(max_examples=100)
@given(narratives())
def test_event_calculus_consistency(narr):
    rules, kb0 = narr
    st_ = SimpleNamespace(kb=AgentKB("a", rules=tuple(rules), config=Config(horizon=30)), kb0=tuple(kb0))
    for f in FLUENTS:
        for t in range(31):
            assert not (holds_ground(st_, f, t) and holds_ground(st_, neg(f), t))
