"""Acceptance suite: one pass/fail line per criterion.

The lines are printed as they are decided and repeated in the pytest
terminal summary."""

import contextlib
import copy
import os
import subprocess
import sys
import time

import pytest

from conftest import ACCEPTANCE, SVS, kb_of
from test_abduction import _psa
from test_preferences import GD, REPLACE, WORLD, _gd_state
from kgp import trace as T
from kgp import transitions as tr
from kgp.abduction import plan, react
from kgp.cli import main
from kgp.constraints import Con, entails
from kgp.control import run
from kgp.preferences import BOTTOM, goal_decision
from kgp.scenario import build, load_scenario, scenario_path
from kgp.state import achieved, children, initial_state
from kgp.syntax import parse_term
from kgp.temporal import holds
from kgp.terms import Fn, TVar, render

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SHIPPED = ["setting1", "setting2", "setting3"]


@contextlib.contextmanager
def criterion(n, desc):
    start = time.perf_counter()
    try:
        yield
    except BaseException as e:
        line = f"criterion {n} FAIL {desc} ({time.perf_counter() - start:.2f}s): {type(e).__name__} {e}"
        ACCEPTANCE.append(line)
        print(line)
        raise
    line = f"criterion {n} PASS {desc} ({time.perf_counter() - start:.2f}s)"
    ACCEPTANCE.append(line)
    print(line)


def _run(name):
    agents, env, cfg = build(load_scenario(scenario_path(name)))
    return run(agents, env, cfg["max_steps"])


def _is_subsequence(pattern, seq):
    it = iter(seq)
    return all(any(x == p for x in it) for p in pattern)


def _fact_time(kb0, name, pred):
    hits = [f for f in kb0 if f.name == name and pred(f)]
    assert len(hits) == 1, [render(f) for f in hits]
    return hits[0].args[-1]


def test_criterion_1_setting1():
    with criterion(1, "setting 1: svs refuses, learns, informs"):
        start = time.perf_counter()
        trace = _run("setting1")
        elapsed = time.perf_counter() - start
        svs = [r for r in trace.records if r.agent == "svs"]
        pattern = [tr.POI, tr.RE, tr.AE, tr.POI, tr.POI, tr.RE, tr.AE]
        assert _is_subsequence(pattern, [r.kind for r in svs])
        kb0 = trace.states[svs[-1].post].kb0
        refuse = parse_term("tell(svs, psa, refuse(arrival(tr01)), d)")
        inform = parse_term("tell(svs, psa, inform(arrival(tr01), 18), d2)")
        t_refuse = _fact_time(kb0, "executed", lambda f: f.args[0] == refuse)
        t_inform = _fact_time(kb0, "executed", lambda f: f.args[0] == inform)
        co = parse_term("tell(co, svs, inform(arrival(tr01), 18), d1)")
        t_obs = _fact_time(kb0, "observed", lambda f: len(f.args) == 3 and f.args[1].args[0] == co)
        q2 = parse_term("tell(psa, svs, query_ref(arrival(tr01)), d2)")
        t_q2 = _fact_time(kb0, "observed", lambda f: len(f.args) == 3 and f.args[1].args[0] == q2)
        assert t_refuse < t_obs < t_q2 < t_inform
        assert elapsed < 5


def test_criterion_2_setting2():
    with criterion(2, "setting 2: plan, sense preconditions, act, empty forest"):
        start = time.perf_counter()
        trace = _run("setting2")
        elapsed = time.perf_counter() - start
        pi = next(r for r in trace.records if r.kind == tr.PI and r.input == (1,))
        s = trace.states[pi.post]
        kids = children(s, 1)
        assert sorted(render(n.content) for n in kids) == [
            "available_connection",
            "available_destination(denver)",
            "buy_ticket_online(madrid, denver)",
        ]
        (act,) = [n for n in kids if n.is_action]
        g11, g12 = [n for n in kids if not n.is_action]
        h = s.kb.config.horizon
        store = s.store()
        for q in (Con("=", g11.tvar, act.tvar), Con("=", g12.tvar, act.tvar), Con("<", act.tvar, TVar(1))):
            assert entails(store, q, h), str(q)
        si = next(r for r in trace.records if r.kind == tr.SI)
        pre, post = trace.states[si.pre], trace.states[si.post]
        new = [n for n in post.nodes if not pre.has_node(n.id)]
        assert len(new) == 2
        for n in new:
            assert n.content.name == "sense" and n.parent == act.parent
            assert entails(post.store(), Con("<", n.tvar, act.tvar), h)
        closing = [r for r in trace.records if r.kind == tr.SR]
        assert trace.states[closing[-1].post].nodes == ()
        assert trace.states[trace.records[-1].post].nodes == ()
        assert elapsed < 10


def test_criterion_3_setting3():
    with criterion(3, "setting 3: express delivery makes the plan redundant"):
        trace = _run("setting3")
        poi = trace.records[0]
        assert (poi.t, poi.kind) == (6, tr.POI)
        assert parse_term("observed(mus, ehd[5], 6)") in trace.states[poi.post].kb0
        sr = next(r for r in trace.records if r.kind == tr.SR)
        pre, post = trace.states[sr.pre], trace.states[sr.post]
        assert sr.t == 8
        assert achieved(pre, parse_term("have(ticket)"), TVar(1), 8)
        assert {n.id for n in pre.nodes} - {n.id for n in post.nodes} == {1, 2, 3}
        assert post.nodes == ()


def test_criterion_4_goal_decision():
    with criterion(4, "goal decision: weak both, strong urgent only, clash is bottom"):
        weak = goal_decision(_gd_state(GD, WORLD, "weak"), 1)
        assert sorted(str(g) for g in weak) == ["<recharge_battery[τ2], {τ2 < 3}>", "<return_home[τ1], {τ1 < 7}>"]
        strong = goal_decision(_gd_state(GD, WORLD, "strong"), 1)
        assert [str(g) for g in strong] == ["<recharge_battery[τ2], {τ2 < 3}>"]
        clash = goal_decision(_gd_state(GD + REPLACE, WORLD + "initially(worn_part).\n", "strong"), 1)
        assert clash == BOTTOM


def test_criterion_5_temporal_query():
    with criterion(5, "temporal query: have_info after 20 yes, before 17 no (observation-time dating)"):
        inform = parse_term("observed(co, tell(co, svs, inform(arrival(tr01), 18), d1)[15], 17)")
        have = parse_term("have_info(arrival(tr01), 18)")
        t = TVar(1)
        st_ = initial_state(kb_of(SVS, "svs", horizon=40, unknown_action_time=True), [inform])
        assert holds(st_, have, t, [Con(">", t, 20)]) is not None
        assert holds(st_, have, t, [Con("<", t, 17)]) is None


def test_criterion_6_plan():
    with criterion(6, "planning: three subgoals, same time, before the goal, after now"):
        s = _psa()
        r = plan(s, 1, 1)
        assert len(r.items) == 3
        store = list(s.store()) + list(r.tc)
        h = s.kb.config.horizon
        ts = [t for _, _, t in r.items]
        assert all(entails(store, Con("=", ts[0], x), h) for x in ts[1:])
        assert entails(store, Con("<", ts[0], TVar(1)), h)
        assert entails(store, Con(">", ts[0], 1), h)


def test_criterion_7_react():
    with criterion(7, "reactivity: only the inform, after now"):
        kb0 = [
            parse_term("observed(psa, tell(psa, svs, query_ref(arrival(tr01)), d)[3], 6)"),
            parse_term("executed(tell(svs, psa, refuse(arrival(tr01)), d), 12)"),
            parse_term("observed(co, tell(co, svs, inform(arrival(tr01), 18), d1)[15], 20)"),
            parse_term("observed(psa, tell(psa, svs, query_ref(arrival(tr01)), d2)[21], 26)"),
        ]
        s = initial_state(kb_of(SVS, "svs", horizon=60), kb0)
        r = react(s, 30)
        ((content, kind, t),) = r.items
        assert (render(content), kind) == ("tell(svs, psa, inform(arrival(tr01), 18), d2)", "action")
        assert entails(list(r.tc), Con(">", t, 30), 60)


ORACLES = [
    "tests/test_abduction.py::test_plan_answers_pass_the_ground_oracle",
    "tests/test_abduction.py::test_react_answers_pass_the_ground_oracle",
    "tests/test_constraints.py::test_solver_agrees_with_enumeration",
    "tests/test_transitions.py::test_sr_is_the_largest_revision",
    "tests/test_preferences.py::test_prefers_agrees_with_enumeration",
    "tests/test_temporal.py::test_event_calculus_consistency",
]


def test_criterion_8_oracle_suites():
    with criterion(8, "oracle suites (a)-(e) green in under 120 s"):
        start = time.perf_counter()
        p = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *ORACLES],
            cwd=ROOT,
            capture_output=True,
            text=True,
        )
        elapsed = time.perf_counter() - start
        assert p.returncode == 0, p.stdout[-2000:]
        assert f"{len(ORACLES)} passed" in p.stdout
        assert elapsed < 120, elapsed


def _mutate(lines, k, how):
    recs = [T.parse_records(x)[0] for x in lines]
    d = recs[k]
    if how == "kind":
        d["kind"] = tr.RE if d["kind"] != tr.RE else tr.GI
    elif how == "tick":
        d["t"] += 1
    elif how == "agent":
        d["agent"] = "nobody"
    elif how == "input":
        d["input"] += " τ99"
    elif how in ("pre", "post"):
        d[how] = "ffffffffffff"
    elif how == "delta":
        d["delta"]["removed"].append("τ99")
    elif how == "delete":
        del recs[k]
    elif how == "swap":
        recs[k], recs[k + 1] = recs[k + 1], recs[k]
    elif how == "duplicate":
        recs.insert(k, copy.deepcopy(d))
    return "".join(T.dumps(r) + "\n" for r in recs)


MUTATIONS = ["kind", "tick", "agent", "input", "pre", "post", "delta", "delete", "swap", "duplicate"]


def test_criterion_9_trace_verification(tmp_path, capsys):
    with criterion(9, "oracle --verify-trace accepts runs and rejects 10 mutations"):
        for name in SHIPPED:
            out = tmp_path / f"{name}.jsonl"
            assert main(["run", "--scenario", name, "--trace", "records", "--out", str(out)]) == 0
            assert main(["oracle", "--scenario", name, "--verify-trace", str(out)]) == 0
            lines = out.read_text(encoding="utf-8").splitlines()
            k = len(lines) // 2
            for how in MUTATIONS:
                bad = tmp_path / f"{name}-{how}.jsonl"
                bad.write_text(_mutate(lines, k, how), encoding="utf-8")
                assert main(["oracle", "--scenario", name, "--verify-trace", str(bad)]) == 3, (name, how)
        capsys.readouterr()


def test_criterion_10_determinism():
    with criterion(10, "two runs give byte-identical record streams"):
        for name in SHIPPED:
            outs = []
            for seed in ("1", "2"):
                env = dict(os.environ, PYTHONHASHSEED=seed)
                p = subprocess.run(
                    [sys.executable, "-m", "kgp.cli", "run", "--scenario", name, "--trace", "records"],
                    env=env,
                    capture_output=True,
                )
                assert p.returncode == 0, p.stderr
                outs.append(p.stdout)
            assert outs[0] == outs[1] and outs[0]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
