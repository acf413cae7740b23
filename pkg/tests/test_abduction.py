from hypothesis import given, settings, strategies as st

from conftest import PSA, PSA_ACTIONS, PSA_FLUENTS, SVS, kb_of
from kgp.abduction import AbductiveAnswer, abduce, check_answer, plan, plan_problem, react, react_problem
from kgp.constraints import Con, entails
from kgp.state import Node, initial_state
from kgp.syntax import parse_term
from kgp.terms import Fn, TVar, render

QUERY = parse_term("observed(psa, tell(psa, svs, query_ref(arrival(tr01)), d)[3], 5)")


def _psa(horizon=40):
    kb = kb_of(PSA, "psa", PSA_FLUENTS, PSA_ACTIONS, horizon=horizon)
    nodes = [Node(1, parse_term("have_ticket(madrid, denver)")), Node(2, parse_term("have_visa(usa)"))]
    return initial_state(kb, [], nodes, [Con("<", TVar(1), 15), Con("<", TVar(2), 15)])


def test_ticket_plan_shape():
    st_ = _psa()
    r = plan(st_, 1, 1)
    assert sorted((render(c), k) for c, k, _ in r.items) == [
        ("available_connection", "goal"),
        ("available_destination(denver)", "goal"),
        ("buy_ticket_online(madrid, denver)", "action"),
    ]
    store = list(st_.store()) + list(r.tc)
    ts = [t for _, _, t in r.items]
    act = next(t for _, k, t in r.items if k == "action")
    h = st_.kb.config.horizon
    assert all(entails(store, Con("=", a, act), h) for a in ts)
    assert entails(store, Con("<", act, TVar(1)), h)
    assert entails(store, Con(">", act, 1), h)


def test_visa_plan_is_partial():
    r = plan(_psa(), 2, 1)
    assert sorted((render(c), k) for c, k, _ in r.items) == [("apply_visa(usa)", "action"), ("have_address(usa)", "goal")]


def test_refusal_reaction():
    kb = kb_of(SVS, "svs", horizon=40)
    st_ = initial_state(kb, [QUERY])
    r = react(st_, 7)
    ((content, kind, t),) = r.items
    assert render(content) == "tell(svs, psa, refuse(arrival(tr01)), d)"
    assert kind == "action"
    assert entails(list(r.tc), Con(">", t, 7), 40)


def test_nothing_to_react_to():
    st_ = initial_state(kb_of(SVS, "svs", horizon=40))
    assert react(st_, 3).items == ()


def test_dropping_the_future_constraint_breaks_the_answer():
    kb = kb_of(SVS, "svs", horizon=8)
    st_ = initial_state(kb, [QUERY])
    prog, q, d0, c0, _ = react_problem(st_, 7)
    ans = abduce(prog, q, d0, c0, next_id=1)
    assert check_answer(prog, q, d0, c0, ans)
    kept = tuple(c for c in ans.tc if not (c.rel == ">" and c.right == 7))
    assert len(kept) < len(ans.tc)
    assert not check_answer(prog, q, d0, c0, AbductiveAnswer(ans.delta, kept))


def test_unsatisfiable_answer_rejected():
    kb = kb_of(SVS, "svs", horizon=8)
    st_ = initial_state(kb, [QUERY])
    prog, q, d0, c0, _ = react_problem(st_, 7)
    ans = abduce(prog, q, d0, c0, next_id=1)
    t = ans.delta[0].args[1]
    bad = AbductiveAnswer(ans.delta, ans.tc + (Con("<", t, 0),))
    assert not check_answer(prog, q, d0, c0, bad)


# random small domains where the goal is always reachable

FLU = ["f0", "f1", "f2", "f3"]


@st.composite
def planning_domains(draw):
    goal = draw(st.sampled_from(FLU))
    others = [f for f in FLU if f != goal]
    init = draw(st.sets(st.sampled_from(others), max_size=2))
    lines = [f"initially({f})." for f in sorted(init)]
    pre = draw(st.lists(st.sampled_from(others), max_size=2, unique=True))
    lines.append(f"initiates(a0, T, {goal}).")
    lines += [f"precondition(a0, {p})." for p in pre]
    for k, p in enumerate(x for x in pre if x not in init):
        lines.append(f"initiates(b{k}, T, {p}).")
    for k in range(draw(st.integers(0, 2))):
        f = draw(st.sampled_from(FLU))
        verb = draw(st.sampled_from(["initiates", "terminates"]))
        lines.append(f"{verb}(c{k}, T, {f}).")
        if draw(st.booleans()):
            lines.append(f"precondition(c{k}, {draw(st.sampled_from(FLU))}).")
    now = draw(st.integers(0, 1))
    # an effect holds from the tick after its action: a precondition chain
    # needs two steps, the goal one more
    deadline = draw(st.integers(now + 5, 8))
    return "\n".join(lines), goal, deadline, now


@settings(max_examples=220)
@given(planning_domains())
def test_plan_answers_pass_the_ground_oracle(dom):
    text, goal, deadline, now = dom
    kb = kb_of(text, "a", {(f, 0): "mental" for f in FLU}, horizon=8)
    st_ = initial_state(kb, [], [Node(1, Fn(goal))], [Con("<", TVar(1), deadline)])
    prog, q, d0, c0, forbid = plan_problem(st_, 1, now)
    ans = abduce(prog, q, d0, c0, bound=5, next_id=st_.next_id, forbid=forbid)
    assert ans is not None
    assert check_answer(prog, q, d0, c0, ans)


@st.composite
def reactive_domains(draw):
    lines = []
    for k in range(draw(st.integers(1, 2))):
        f = draw(st.sampled_from(FLU))
        cond = f", holds_at({draw(st.sampled_from(FLU))}, T)" if draw(st.booleans()) else ""
        lines.append(f"observed({f}, T){cond} => assume_happens(r{k}, T2) : T2 > T.")
    kb0 = [Fn("observed", (Fn(draw(st.sampled_from(FLU))), draw(st.integers(0, 3)))) for _ in range(draw(st.integers(1, 3)))]
    return "\n".join(lines), kb0


@settings(max_examples=60)
@given(reactive_domains())
def test_react_answers_pass_the_ground_oracle(dom):
    text, kb0 = dom
    kb = kb_of(text, "a", {(f, 0): "mental" for f in FLU}, horizon=7)
    st_ = initial_state(kb, kb0)
    prog, q, d0, c0, _ = react_problem(st_, 4)
    ans = abduce(prog, q, d0, c0, bound=4, next_id=st_.next_id)
    assert ans is not None
    assert check_answer(prog, q, d0, c0, ans)
