import itertools

from hypothesis import given, settings, strategies as st

from kgp.kb import AgentKB, Config
from kgp.preferences import BOTTOM, GroundTheory, Item, PriorityTheory, goal_decision
from kgp.syntax import GoalRule, Located, Priority, parse_clauses, parse_term
from kgp.state import initial_state
from kgp.terms import Fn, render

GD = """
n(return_home, Tau) :: return_home[Tau] : Tau < T2 <- holds_at(finished_work, T), holds_at(¬at_home, T), time_now(T), T2 = T + 6.
n(recharge_battery, Tau) :: recharge_battery[Tau] : Tau < T2 <- holds_at(low_battery, T), time_now(T), T2 = T + 2.
typeof(return_home, required).
typeof(recharge_battery, operational).
more_urgent_wrt_type(operational, required).
incompatible(return_home(T), recharge_battery(T)).
gd_pref(X, Y) :: n(X, _) > n(Y, _) <- typeof(X, XT), typeof(Y, YT), more_urgent_wrt_type(XT, YT).
"""
REPLACE = """
n(replace_part, Tau) :: replace_part[Tau] : Tau < T2 <- holds_at(worn_part, T), time_now(T), T2 = T + 4.
typeof(replace_part, operational).
incompatible(recharge_battery(T), replace_part(T)).
"""
WORLD = "initially(finished_work).\ninitially(¬at_home).\ninitially(low_battery).\n"


def _gd_state(text, domain, mode):
    goals, prios, aux = [], [], []
    for c in parse_clauses(text):
        if isinstance(c, GoalRule):
            goals.append(c)
        elif isinstance(c, Priority):
            prios.append(c)
        else:
            aux.append(c.item)
    rules = tuple(c.item for c in parse_clauses(domain))
    kb = AgentKB(
        "robot",
        rules=rules,
        goal_rules=tuple(goals),
        gd_priorities=tuple(prios),
        gd_rules=tuple(aux),
        config=Config(incompat=mode, horizon=30),
    )
    return initial_state(kb)


def _show(res):
    return res if res == BOTTOM else sorted(str(g) for g in res)


def test_weak_mode_keeps_both_goals():
    res = goal_decision(_gd_state(GD, WORLD, "weak"), 1)
    assert _show(res) == ["<recharge_battery[τ2], {τ2 < 3}>", "<return_home[τ1], {τ1 < 7}>"]


def test_strong_mode_keeps_the_urgent_goal():
    res = goal_decision(_gd_state(GD, WORLD, "strong"), 1)
    assert _show(res) == ["<recharge_battery[τ2], {τ2 < 3}>"]


def test_strong_mode_with_two_operational_goals_is_bottom():
    res = goal_decision(_gd_state(GD + REPLACE, WORLD + "initially(worn_part).\n", "strong"), 1)
    assert res == BOTTOM


def test_no_goals_when_nothing_fires():
    assert goal_decision(_gd_state(GD, "initially(at_home).\n", "weak"), 1) == ()


def test_priority_theory_from_rules():
    cs = parse_clauses(
        """
        r1 :: fly(X) <- bird(X).
        r2 :: ¬fly(X) <- penguin(X).
        p :: r2 > r1.
        bird(tweety). penguin(tweety).
        incompatible(fly(X), ¬fly(X)).
        """
    )
    basic = [c.item for c in cs[:2]]
    th = PriorityTheory(tuple(basic), (cs[2],), tuple(c.item for c in cs[3:5]), (cs[5].item,), 10)
    gt = th.ground()
    assert gt.sceptical([parse_term("¬fly(tweety)")])
    assert not gt.credulous([parse_term("fly(tweety)")])


# brute-force sub-theory enumeration


def brute(items, inc):
    n = len(items)
    subsets = [frozenset(c) for k in range(n + 1) for c in itertools.combinations(range(n), k)]
    cons = [s for s in subsets if not any(inc(items[i], items[j]) for i in s for j in s)]

    def names(s):
        return {items[i].name for i in s if items[i].kind == "basic"}

    def beats(y, x):
        yn, xn = names(y), names(x)
        ya = any(items[h].kind == "priority" and items[h].higher in yn and items[h].lower in xn for h in y)
        xa = any(items[h].kind == "priority" and items[h].higher in xn and items[h].lower in yn for h in x)
        return ya and not xa

    adm = []
    for x in cons:
        if not any(beats(y, x) for y in cons if any(inc(items[i], items[j]) for i in y for j in x)):
            adm.append(x)

    def credulous(a):
        return any(a in {items[i].conclusion for i in s} for s in adm)

    def sceptical(a):
        if not credulous(a):
            return False
        tgt = [j for j, it in enumerate(items) if it.kind == "basic" and it.conclusion == a]
        return not any(inc(items[i], items[j]) for s in adm for i in s for j in tgt)

    return adm, credulous, sceptical


CONCL = ["a", "b", "c"]


@st.composite
def theories(draw):
    nb = draw(st.integers(1, 4))
    basic = [Item(Fn(f"r{k}"), Fn(draw(st.sampled_from(CONCL)))) for k in range(nb)]
    np_ = draw(st.integers(0, 6 - nb))
    prios = []
    for k in range(np_):
        hi, lo = draw(st.permutations(range(nb)).map(lambda p: p[:2])) if nb > 1 else (0, 0)
        if hi == lo:
            continue
        it = Item(Fn(f"h{k}"), (basic[hi].name, basic[lo].name), "priority")
        if it.conclusion not in [p.conclusion for p in prios]:
            prios.append(it)
    pairs = draw(st.sets(st.sampled_from([("a", "b"), ("a", "c"), ("b", "c")]), max_size=3))
    return basic + prios, pairs


@settings(max_examples=100)
@given(theories())
def test_prefers_agrees_with_enumeration(th):
    items, pairs = th

    def incompat(x, y):
        return (render(x), render(y)) in pairs or (render(y), render(x)) in pairs

    gt = GroundTheory(items, incompat)
    adm, credulous, sceptical = brute(items, gt.incompatible)
    for c in CONCL:
        a = Fn(c)
        assert gt.credulous([a]) == credulous(a)
        assert gt.sceptical([a]) == sceptical(a)
    for k in range(len(items) + 1):
        for sub in itertools.combinations(range(len(items)), k):
            assert gt.admissible([items[i] for i in sub]) == (frozenset(sub) in adm)
