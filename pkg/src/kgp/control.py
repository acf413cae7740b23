"""Cycle theories: which transition an agent performs next, and the
scheduler that runs agents against an environment.

A cycle theory is a priority theory whose basic rules conclude
``next(K)`` for a transition kind ``K``. Their bodies test the previous
transition (``last(K)``, with ``last(0)`` before the first one) and
auxiliary facts computed from the state at the current time:

    empty_forest                   the forest has no nodes
    empty_non_executable_goals     goal selection returns nothing
    empty_executable_goals         action selection returns nothing
    goal_selected, actions_selected, effects_selected,
    preconditions_selected         the selection operators return something
    unreliable_pre                 a selectable action matches an
                                   ``unreliable_pre`` pattern
    unreliable_effect              a recently executed action matches an
                                   ``unreliable_effect`` pattern
    pending_input                  the environment has pushed observations
    time_now(T)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import transitions as tr
from .errors import KGPError, ValidationError
from .lp import Rule
from .preferences import GroundTheory, Item, PriorityTheory
from .syntax import Located, Priority, parse_clauses
from .terms import Fn, Var, match, render

HALT = "halt"

_KIND_ATOM = {k: k.lower() for k in tr.KINDS}
_ATOM_KIND = {v: k for k, v in _KIND_ATOM.items()}

NORMAL_CYCLE_TEXT = """\
% initial rules
r(0, gi) :: next(gi) <- last(0), empty_forest.
r(0, ae) :: next(ae) <- last(0), empty_non_executable_goals, actions_selected.
r(0, pi) :: next(pi) <- last(0), goal_selected.

% what may follow AE
r(ae, pi) :: next(pi) <- last(ae), goal_selected.
r(ae, ae) :: next(ae) <- last(ae), actions_selected.
r(ae, aoi) :: next(aoi) <- last(ae), effects_selected.
r(ae, sr) :: next(sr) <- last(ae).
r(ae, gi) :: next(gi) <- last(ae).

% what may follow SR
r(sr, pi) :: next(pi) <- last(sr), goal_selected.
r(sr, gi) :: next(gi) <- last(sr), empty_non_executable_goals.
r(sr, ae) :: next(ae) <- last(sr), actions_selected.

% what may follow PI
r(pi, ae) :: next(ae) <- last(pi), actions_selected.
r(pi, si) :: next(si) <- last(pi), preconditions_selected.

% what may follow GI
r(gi, re) :: next(re) <- last(gi).
r(gi, pi) :: next(pi) <- last(gi), goal_selected.

% what may follow RE
r(re, pi) :: next(pi) <- last(re), goal_selected.
r(re, si) :: next(si) <- last(re), preconditions_selected.

% what may follow SI
r(si, ae) :: next(ae) <- last(si), actions_selected.
r(si, sr) :: next(sr) <- last(si).

% what may follow AOI
r(aoi, ae) :: next(ae) <- last(aoi), actions_selected.
r(aoi, sr) :: next(sr) <- last(aoi).
r(aoi, si) :: next(si) <- last(aoi), preconditions_selected.

% what may follow POI
r(poi, gi) :: next(gi) <- last(poi).

% behaviour
p(T, gi, T2) :: r(T, gi) > r(T, T2) <- empty_forest, T2 != gi.
p(poi, gi, T) :: r(poi, gi) > r(poi, T) <- T != gi.
p(gi, re, T) :: r(gi, re) > r(gi, T) <- T != re.
p(re, pi, T) :: r(re, pi) > r(re, T) <- T != pi.
p(pi, ae, T) :: r(pi, ae) > r(pi, T) <- T != ae, not unreliable_pre.
p(pi, si, ae) :: r(pi, si) > r(pi, ae) <- unreliable_pre.
p(si, ae, T) :: r(si, ae) > r(si, T) <- T != ae.
p(ae, ae, T) :: r(ae, ae) > r(ae, T) <- T != ae.
p(ae, aoi, T) :: r(ae, aoi) > r(ae, T) <- T != aoi, bc_aoi.
p(ae, sr, T) :: r(ae, sr) > r(ae, T) <- T != sr, bc_sr.
p(sr, pi, T) :: r(sr, pi) > r(sr, T) <- T != pi.
p(0, pi, T) :: r(0, pi) > r(0, T) <- T != pi.

% auxiliary
bc_aoi <- empty_executable_goals, unreliable_effect.
bc_sr <- empty_executable_goals, not unreliable_effect.

% passive observation may interrupt any transition
r(T, poi) :: next(poi) <- last(T), pending_input.
q(T, poi, T2) :: r(T, poi) > r(T, T2) <- pending_input, T2 != poi.

% one transition at a time
incompatible(next(X), next(Y)) <- X != Y.
"""


@dataclass(frozen=True)
class CycleTheory:
    """Initial and basic rules, behaviour priorities, auxiliary rules and
    the incompatibility rules."""

    initial: tuple = ()
    basic: tuple = ()
    behaviour: tuple = ()
    auxiliary: tuple = ()
    incompatibility: tuple = ()

    def theory(self, horizon: int) -> PriorityTheory:
        return PriorityTheory(
            self.initial + self.basic, self.behaviour, self.auxiliary, self.incompatibility, horizon
        )


def _is_initial(rule: Rule) -> bool:
    n = rule.name
    return isinstance(n, Fn) and len(n.args) == 2 and n.args[0] == 0


def _check_rule_name(rule: Rule, line) -> None:
    """Transition rules are named r(Prev, Next) after the step they license."""
    n, k = rule.name, rule.head.args[0]
    ok = isinstance(n, Fn) and n.name == "r" and len(n.args) == 2
    if ok and isinstance(k, Fn):
        ok = not k.args and k.name in _ATOM_KIND and (isinstance(n.args[1], Var) or n.args[1] == k)
    if not ok:
        raise ValidationError(f"transition rule for {render(rule.head)} must be named r(Prev, Next)", line)


def cycle_theory(clauses: Sequence) -> CycleTheory:
    """Sort parsed clauses into the parts of a cycle theory."""
    initial, basic, behaviour, aux, incompat = [], [], [], [], []
    for c in clauses:
        line = getattr(c, "line", None)
        if isinstance(c, Priority):
            if c.name is None:
                raise ValidationError("cycle priorities must be named", line)
            behaviour.append(c)
        elif isinstance(c, Located) and isinstance(c.item, Rule):
            r = c.item
            if r.head.name == "incompatible":
                incompat.append(r)
            elif r.head.name == "next" and len(r.head.args) == 1:
                _check_rule_name(r, line)
                (initial if _is_initial(r) else basic).append(r)
            else:
                aux.append(r)
        else:
            raise ValidationError("cycle theories hold rules and priorities only", getattr(c, "line", None))
    return CycleTheory(tuple(initial), tuple(basic), tuple(behaviour), tuple(aux), tuple(incompat))


def normal_cycle_theory() -> CycleTheory:
    return cycle_theory(parse_clauses(NORMAL_CYCLE_TEXT))


# ------------------------------------------------------------ the facts


def _matches_any(patterns, actions) -> bool:
    return any(match(p, a) is not None for p in patterns for a in actions)


@dataclass
class Situation:
    """Selection results and auxiliary facts for one agent at one time."""

    goals: tuple
    actions: tuple
    effects: tuple
    preconditions: tuple
    facts: tuple = field(default=())

    def input_for(self, kind: str) -> tuple:
        return {
            tr.PI: self.goals,
            tr.AE: self.actions,
            tr.AOI: self.effects,
            tr.SI: self.preconditions,
        }.get(kind, ())


def situation(state, now: int, pending: bool = False) -> Situation:
    goals = tr.select_goal(state, now)
    actions = tr.select_actions(state, now)
    effects = tr.select_effects(state, now)
    pre = tr.select_preconditions(state, now)
    kb = state.kb
    facts = [Fn("time_now", (now,))]

    def flag(name, cond):
        if cond:
            facts.append(Fn(name))

    flag("empty_forest", not state.nodes)
    flag("empty_non_executable_goals", not goals)
    flag("empty_executable_goals", not actions)
    flag("goal_selected", goals)
    flag("actions_selected", actions)
    flag("effects_selected", effects)
    flag("preconditions_selected", pre)
    flag("pending_input", pending)
    sel = [state.node(i).content for i in actions]
    flag("unreliable_pre", _matches_any(kb.unreliable_pre, sel))
    eps = kb.config.epsilon
    recent = [f.args[0] for f in state.kb0 if f.name == "executed" and len(f.args) == 2 and now - eps < f.args[1] < now]
    flag("unreliable_effect", _matches_any(kb.unreliable_effect, recent))
    return Situation(goals, actions, effects, pre, tuple(facts))


def _last(prev) -> Fn:
    if prev is None:
        return Fn("last", (0,))
    return Fn("last", (Fn(_KIND_ATOM[prev]),))


def ground_cycle(cycle: CycleTheory, facts: Sequence[Fn], horizon: int) -> GroundTheory:
    return cycle.theory(horizon).ground(facts)


def _kind_of(conclusion) -> str | None:
    if isinstance(conclusion, Fn) and conclusion.name == "next" and len(conclusion.args) == 1:
        a = conclusion.args[0]
        if isinstance(a, Fn) and not a.args:
            return _ATOM_KIND.get(a.name)
    return None


def enabled(cycle: CycleTheory, prev: str | None, state, now: int, pending: bool = False, sit=None) -> list:
    """Enabled (kind, input) pairs in tie-break order."""
    sit = sit or situation(state, now, pending)
    gt = ground_cycle(cycle, list(sit.facts) + [_last(prev)], state.kb.config.horizon)
    kinds = {_kind_of(i.conclusion) for i in gt.basic} - {None}
    return [(k, sit.input_for(k)) for k in tr.KINDS if k in kinds]


def choose(gt: GroundTheory) -> tuple:
    """(kind, how) for the most preferred conclusion; how is "sceptical"
    or "credulous". Ties go to the fixed kind order."""
    kinds = [k for k in tr.KINDS if any(_kind_of(i.conclusion) == k for i in gt.basic)]
    for k in kinds:
        if gt.sceptical([Fn("next", (Fn(_KIND_ATOM[k]),))]):
            return k, "sceptical"
    for k in kinds:
        if gt.credulous([Fn("next", (Fn(_KIND_ATOM[k]),))]):
            return k, "credulous"
    return None, None


def next_transition(cycle: CycleTheory, prev: str | None, state, now: int, pending: bool = False):
    """(kind, input) of the preferred transition, or HALT. When nothing
    follows ``prev``, the initial rules are consulted again."""
    sit = situation(state, now, pending)
    h = state.kb.config.horizon
    for last in ([prev, None] if prev is not None else [None]):
        gt = ground_cycle(cycle, list(sit.facts) + [_last(last)], h)
        k, _how = choose(gt)
        if k is not None:
            return k, sit.input_for(k)
    return HALT


# ------------------------------------------------------------- running


@dataclass
class Agent:
    state: object
    cycle: CycleTheory
    last: str | None = None


@dataclass
class Trace:
    records: list = field(default_factory=list)
    states: dict = field(default_factory=dict)  # snapshot id -> state
    error: str | None = None

    def __len__(self) -> int:
        return len(self.records)


def run(agents: Sequence[Agent], env, max_steps: int, horizon: int | None = None) -> Trace:
    """Round-robin: at tick t the agent ``agents[(t - 1) % n]`` acts.
    Stops after ``max_steps`` records, past ``horizon``, or when every agent
    halts in one round with nothing left in transit. A failing transition
    ends the run with the partial trace and the error recorded."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    agents = list(agents)
    n = len(agents)
    trace = Trace()
    for a in agents:
        trace.states[tr.snapshot(a.state)] = a.state
    if env.tick < 1:
        while env.tick < 1:
            env.advance_clock()
    halted = 0
    while len(trace.records) < max_steps:
        t = env.tick
        if horizon is not None and t > horizon:
            break
        agent = agents[(t - 1) % n]
        name = agent.state.name
        try:
            choice = next_transition(agent.cycle, agent.last, agent.state, t, env.pending(name, t))
            if choice == HALT:
                halted += 1
                if halted >= n and env.idle():
                    break
            else:
                halted = 0
                kind, inp = choice
                pre = agent.state
                post = tr.apply(kind, pre, inp, t, env)
                tr.check_frame(kind, pre, post)
                pid, qid = tr.snapshot(pre), tr.snapshot(post)
                trace.states[qid] = post
                trace.records.append(tr.TransitionRecord(name, kind, tuple(inp), pid, qid, t))
                agent.state = post
                agent.last = kind
        except KGPError as e:
            trace.error = f"{name} at {t}: {e}"
            break
        env.advance_clock()
    return trace


def render_input(kind: str, inp: tuple) -> str:
    if kind in (tr.PI, tr.AE):
        return "{" + ", ".join(f"τ{i}" for i in inp) + "}"
    if kind == tr.SI:
        return "{" + ", ".join(f"<{render(lit)}, τ{a}>" for lit, a in inp) + "}"
    if kind == tr.AOI:
        return "{" + ", ".join(render(f) for f in inp) + "}"
    return "{}"
