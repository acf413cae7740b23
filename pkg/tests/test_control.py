import pytest

from conftest import kb_of
from kgp import transitions as tr
from kgp.control import HALT, Agent, CycleTheory, cycle_theory, next_transition, normal_cycle_theory, run, situation
from kgp.environment import Environment, FluentObs, WorldScript
from kgp.errors import ValidationError
from kgp.scenario import build, load_scenario, scenario_path
from kgp.state import initial_state
from kgp.syntax import parse_clauses
from kgp.terms import Fn


def _setting(name):
    return build(load_scenario(scenario_path(name)))


def test_normal_theory_structure():
    c = normal_cycle_theory()
    # 20 basic rules and 12 priorities, plus one of each for POI
    assert (len(c.initial), len(c.basic), len(c.behaviour), len(c.auxiliary), len(c.incompatibility)) == (3, 21, 13, 2, 1)
    assert all(r.name.name == "r" for r in c.initial + c.basic)
    assert all(p.name is not None for p in c.behaviour)


def test_fresh_agent_starts_with_gi():
    s = initial_state(kb_of("", "a"))
    assert next_transition(normal_cycle_theory(), None, s, 1) == (tr.GI, ())


def test_agent_with_goals_starts_with_pi():
    agents, _env, _ = _setting("setting2")
    assert next_transition(agents[0].cycle, None, agents[0].state, 2) == (tr.PI, (1,))


def test_re_follows_gi():
    s = initial_state(kb_of("", "a"))
    assert next_transition(normal_cycle_theory(), tr.GI, s, 2)[0] == tr.RE


def test_si_beats_ae_for_unreliable_preconditions():
    agents, _env, _ = _setting("setting2")
    s = tr.pi(agents[0].state, 1, 2)
    assert "unreliable_pre" in [f.name for f in situation(s, 3).facts]
    kind, inp = next_transition(agents[0].cycle, tr.PI, s, 3)
    assert kind == tr.SI and len(inp) == 2


def test_pending_input_gives_poi():
    s = initial_state(kb_of("", "a"))
    assert next_transition(normal_cycle_theory(), tr.RE, s, 2, pending=True)[0] == tr.POI
    # GI then RE is itself a priority, so the tie goes to the kind order
    assert next_transition(normal_cycle_theory(), tr.GI, s, 2, pending=True)[0] == tr.RE


def test_empty_cycle_theory_halts():
    s = initial_state(kb_of("", "a"))
    assert next_transition(CycleTheory((), (), (), (), ()), None, s, 1) == HALT


def test_misnamed_transition_rule_rejected():
    with pytest.raises(ValidationError):
        cycle_theory(parse_clauses("next(gi) <- last(0)."))
    with pytest.raises(ValidationError):
        cycle_theory(parse_clauses("r(0, ae) :: next(gi) <- last(0)."))


def test_max_steps_one():
    agents, env, _ = _setting("setting1")
    assert len(run(agents, env, 1).records) == 1
    with pytest.raises(ValueError):
        run(agents, env, 0)


def test_clock_strictly_increases_and_turns_alternate():
    agents, env, cfg = _setting("setting1")
    trace = run(agents, env, cfg["max_steps"])
    ts = [r.t for r in trace.records]
    assert ts == sorted(set(ts))
    assert all(r.agent == ("psa" if r.t % 2 else "svs") for r in trace.records)


def test_choice_depends_only_on_prev_state_and_time():
    agents, env, cfg = _setting("setting2")
    trace = run(agents, env, cfg["max_steps"])
    cyc = normal_cycle_theory()
    prev = None
    for r in trace.records:
        kind, inp = next_transition(cyc, prev, trace.states[r.pre], r.t)
        assert (kind, tuple(inp)) == (r.kind, r.input)
        prev = r.kind


def test_failed_transition_aborts_with_partial_trace():
    s = initial_state(kb_of("", "a"))
    w = WorldScript(exogenous=[(2, "a", FluentObs(Fn("f"), True)), (2, "a", FluentObs(Fn("f"), False))])
    trace = run([Agent(s, normal_cycle_theory())], Environment(["a"], w), 10)
    assert trace.error == "a at 3: f sensed both true and false"
    assert [r.kind for r in trace.records] == [tr.GI, tr.RE]


def test_all_halted_and_idle_stops():
    s = initial_state(kb_of("", "a"))
    trace = run([Agent(s, CycleTheory((), (), (), (), ()))], Environment(["a"]), 10)
    assert trace.records == [] and trace.error is None
