"""Scenario files: agents, their knowledge, initial states and the world.

A scenario is a sequence of clauses in the rule syntax, organised by
directives::

    #config max_steps 40.          % before any agent: run options
    #agent svs.                    % starts an agent block
    #config horizon 60.            % inside a block: agent options
    #fluent have_info/2.           % sort declarations
    #fluent available_connection/0 sensing.
    #action tell/4 communication.
    #section kb.                   % domain rules, ICs, reactive constraints
    #section goals.                % goal rules, priorities, auxiliary rules
    #section cycle.                % optional inline cycle theory
    #section state.                % initial state
    #world.                        % world script for the environment

State clauses are ``node(τ1, g)``, ``node(τ3, a, τ1)`` (child of τ1),
``reactive_node(...)`` with the same shapes, constraints such as
``τ1 < 15``, bindings ``sigma(τ3, 4)`` and narrative facts.

World clauses are ``holds(f, Tick, true|false)``, ``deny(Pattern)``,
``deny(Pattern, From, To)``, ``admit(...)`` likewise, and
``exogenous(Tick, Agent, Item)`` where Item is a fluent, ``¬f`` or
``msg(C, A[T])``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import constraints as cs
from .control import Agent, CycleTheory, cycle_theory, normal_cycle_theory
from .environment import ActionObs, Environment, FluentObs, Rule as PolicyRule, WorldScript
from .errors import ParseError, ValidationError
from .kb import ACTION_KINDS, FLUENT_KINDS, AgentKB, Config
from .lp import IC, Rule, negative_cycles
from .state import ACTION, GOAL, Node, check_wellformed, initial_state
from .syntax import Constraint, Directive, GoalRule, Located, Priority, Reactive, parse_clauses, print_clause
from .temporal import EC_PREDICATES
from .terms import AT, Fn, TVar, is_fully_ground, is_neg, positive_part, render

SECTIONS = ("kb", "goals", "cycle", "state")
RUN_KEYS = {"max_steps": int, "delay": int, "start": int, "world_applies_effects": bool, "horizon": int}
AGENT_KEYS = {
    "horizon": int,
    "epsilon": int,
    "gi_mode": str,
    "incompat": str,
    "delta_bound": int,
    "unknown_action_time": bool,
}
_CHOICES = {"gi_mode": ("replace", "merge"), "incompat": ("weak", "strong")}


@dataclass
class AgentSpec:
    name: str
    directives: list = field(default_factory=list)
    sections: dict = field(default_factory=lambda: {s: [] for s in SECTIONS})
    has_cycle: bool = False
    line: int = 0

    def key(self):
        return (self.name, tuple(self.directives), tuple((s, tuple(self.sections[s])) for s in SECTIONS), self.has_cycle)


@dataclass
class Scenario:
    directives: list = field(default_factory=list)
    agents: list = field(default_factory=list)
    world: list = field(default_factory=list)

    def key(self):
        return (tuple(self.directives), tuple(a.key() for a in self.agents), tuple(self.world))

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.key() == other.key()

    def agent(self, name: str) -> AgentSpec:
        for a in self.agents:
            if a.name == name:
                return a
        raise ValidationError(f"no agent {name!r}")

    def run_config(self) -> dict:
        out = {"max_steps": 50, "delay": 2, "start": 1, "world_applies_effects": False}
        for d in self.directives:
            k, v = _config_pair(d, RUN_KEYS)
            out[k] = v
        return out


# ------------------------------------------------------------- parsing


def _value(t, typ, line):
    s = render(t)
    if typ is int:
        if isinstance(t, int) and not isinstance(t, bool):
            return t
        raise ValidationError(f"expected an integer, got {s}", line)
    if typ is bool:
        if s in ("true", "false"):
            return s == "true"
        raise ValidationError(f"expected true or false, got {s}", line)
    return s


def _config_pair(d: Directive, keys: dict) -> tuple:
    if len(d.args) != 2:
        raise ValidationError("#config takes a key and a value", d.line)
    key = render(d.args[0])
    if key not in keys:
        raise ValidationError(f"unknown config key {key!r}", d.line)
    v = _value(d.args[1], keys[key], d.line)
    if key in _CHOICES and v not in _CHOICES[key]:
        raise ValidationError(f"{key} must be one of {', '.join(_CHOICES[key])}", d.line)
    return key, v


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text."""
    sc = Scenario()
    agent: AgentSpec | None = None
    section: str | None = None
    in_world = False
    for c in parse_clauses(text):
        if isinstance(c, Directive):
            if c.name == "agent":
                if len(c.args) != 1 or not isinstance(c.args[0], Fn) or c.args[0].args:
                    raise ValidationError("#agent takes a name", c.line)
                name = c.args[0].name
                if any(a.name == name for a in sc.agents):
                    raise ValidationError(f"agent {name} declared twice", c.line)
                agent = AgentSpec(name, line=c.line)
                sc.agents.append(agent)
                section, in_world = None, False
            elif c.name == "world":
                in_world, agent, section = True, None, None
            elif c.name == "section":
                if agent is None:
                    raise ValidationError("#section outside an agent block", c.line)
                s = render(c.args[0]) if len(c.args) == 1 else ""
                if s not in SECTIONS:
                    raise ValidationError(f"unknown section {s!r}", c.line)
                section = s
                if s == "cycle":
                    agent.has_cycle = True
            elif c.name in ("config", "fluent", "action"):
                if in_world:
                    raise ValidationError(f"#{c.name} inside the world block", c.line)
                if agent is None:
                    if c.name != "config":
                        raise ValidationError(f"#{c.name} outside an agent block", c.line)
                    _config_pair(c, RUN_KEYS)
                    sc.directives.append(c)
                else:
                    agent.directives.append(c)
            else:
                raise ValidationError(f"unknown directive #{c.name}", c.line)
            continue
        if in_world:
            sc.world.append(c)
        elif agent is None or section is None:
            raise ValidationError("clause outside a section", getattr(c, "line", None))
        else:
            agent.sections[section].append(c)
    validate(sc)
    return sc


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# ---------------------------------------------------------- validation


def _line(c):
    return getattr(c, "line", None)


def _signature(spec: AgentSpec) -> tuple:
    fluents, actions = {}, {}
    for d in spec.directives:
        if d.name == "config":
            _config_pair(d, AGENT_KEYS)
            continue
        if not d.args or not (isinstance(d.args[0], Fn) and d.args[0].name == "/"):
            raise ValidationError(f"#{d.name} takes name/arity", d.line)
        sym = d.args[0].args
        key = (render(sym[0]), sym[1])
        kinds = [render(a) for a in d.args[1:]]
        if d.name == "fluent":
            kind = kinds[0] if kinds else "mental"
            if kind not in FLUENT_KINDS:
                raise ValidationError(f"fluent kind must be one of {', '.join(FLUENT_KINDS)}", d.line)
            fluents[key] = kind
        else:
            kind = kinds[0] if kinds else "physical"
            if kind not in ACTION_KINDS:
                raise ValidationError(f"action kind must be one of {', '.join(ACTION_KINDS)}", d.line)
            actions[key] = kind
    return fluents, actions


def _sym(t):
    return (t.name, len(t.args)) if isinstance(t, Fn) else None


def _check_fluent(t, fluents, line, what="fluent"):
    f = positive_part(t)
    if isinstance(f, Fn) and _sym(f) not in fluents:
        raise ValidationError(f"undeclared {what} {f.name}/{len(f.args)}", line)


def _check_action(t, actions, line):
    if isinstance(t, Fn) and t.name != "sense" and _sym(t) not in actions:
        raise ValidationError(f"undeclared action {t.name}/{len(t.args)}", line)


def validate(sc: Scenario) -> None:
    if not sc.agents:
        raise ValidationError("scenario declares no agents")
    names = {a.name for a in sc.agents}
    for spec in sc.agents:
        fluents, actions = _signature(spec)
        rules = []
        initially = {}
        for c in spec.sections["kb"]:
            if isinstance(c, Located) and isinstance(c.item, Rule):
                r = c.item
                rules.append(r)
                h = r.head
                if h.name == "initially" and len(h.args) == 1:
                    _check_fluent(h.args[0], fluents, c.line)
                    if not r.body and is_fully_ground(h.args[0]):
                        f = positive_part(h.args[0])
                        v = not is_neg(h.args[0])
                        if initially.get(f, v) != v:
                            raise ValidationError(
                                f"initially({render(f)}) and initially(¬{render(f)}) are both declared", c.line
                            )
                        initially[f] = v
                elif h.name in ("initiates", "terminates") and len(h.args) == 3:
                    _check_action(h.args[0], actions, c.line)
                    _check_fluent(h.args[2], fluents, c.line)
                elif h.name == "precondition" and len(h.args) == 2:
                    _check_action(h.args[0], actions, c.line)
                    _check_fluent(h.args[1], fluents, c.line)
            elif isinstance(c, (Reactive, Located)):
                continue
            else:
                raise ValidationError("unexpected clause in kb section", _line(c))
        own = [r for r in rules if not any((r.head.name, len(r.head.args)) == p for p in EC_PREDICATES)]
        bad = negative_cycles(own)
        if bad:
            raise ValidationError("program is not stratified: " + ", ".join(f"{n}/{a}" for n, a in bad[0]))
        for c in spec.sections["goals"]:
            if isinstance(c, GoalRule):
                _check_fluent(c.literal, fluents, c.line, "goal fluent")
            elif not isinstance(c, (Priority, Located)):
                raise ValidationError("unexpected clause in goals section", _line(c))
        if spec.has_cycle:
            cycle_theory(spec.sections["cycle"])
        for c in spec.sections["state"]:
            if isinstance(c, Constraint):
                continue
            if not (isinstance(c, Located) and isinstance(c.item, Rule) and not c.item.body):
                raise ValidationError("state section holds facts and constraints only", _line(c))
            f = c.item.head
            if f.name in ("node", "reactive_node"):
                if len(f.args) not in (2, 3) or not all(isinstance(x, TVar) for x in (f.args[0],) + f.args[2:]):
                    raise ValidationError(f"{f.name} takes (τ, content) or (τ, content, τparent)", c.line)
                x = f.args[1]
                if _sym(x) in actions or (isinstance(x, Fn) and x.name == "sense"):
                    continue
                _check_fluent(x, fluents, c.line, "goal or action")
    for c in sc.world:
        if not (isinstance(c, Located) and isinstance(c.item, Rule) and not c.item.body):
            raise ValidationError("world section holds facts only", _line(c))
        f = c.item.head
        if f.name == "exogenous":
            if len(f.args) != 3 or render(f.args[1]) not in names:
                raise ValidationError("exogenous(Tick, Agent, Item) must name a declared agent", c.line)
        elif f.name not in ("holds", "deny", "admit"):
            raise ValidationError(f"unknown world fact {f.name}", c.line)
    world_script(sc)
    for spec in sc.agents:
        state = build_agent(spec, sc).state
        check_wellformed(state)


# --------------------------------------------------------------- printing


def print_scenario(sc: Scenario) -> str:
    out = [print_clause(d) for d in sc.directives]
    for a in sc.agents:
        out.append("")
        out.append(f"#agent {a.name}.")
        out += [print_clause(d) for d in a.directives]
        for s in SECTIONS:
            if a.sections[s] or (s == "cycle" and a.has_cycle):
                out.append(f"#section {s}.")
                out += [print_clause(c) for c in a.sections[s]]
    if sc.world:
        out.append("")
        out.append("#world.")
        out += [print_clause(c) for c in sc.world]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- building


def agent_config(spec: AgentSpec, sc: Scenario) -> Config:
    kw = {"horizon": cs.default_horizon()}
    run = sc.run_config()
    if "horizon" in run:
        kw["horizon"] = run["horizon"]
    for d in spec.directives:
        if d.name == "config":
            k, v = _config_pair(d, AGENT_KEYS)
            kw[k] = v
    return Config(**kw)


def build_kb(spec: AgentSpec, sc: Scenario) -> AgentKB:
    fluents, actions = _signature(spec)
    rules, ics, reactive, upre, ueff = [], [], [], [], []
    for c in spec.sections["kb"]:
        if isinstance(c, Reactive):
            reactive.append(c)
        elif isinstance(c.item, IC):
            ics.append(c.item)
        else:
            r = c.item
            if not r.body and r.head.name in ("unreliable_pre", "unreliable_effect") and len(r.head.args) == 1:
                (upre if r.head.name == "unreliable_pre" else ueff).append(r.head.args[0])
            else:
                rules.append(r)
    goal_rules, prios, gd = [], [], []
    for c in spec.sections["goals"]:
        if isinstance(c, GoalRule):
            goal_rules.append(c)
        elif isinstance(c, Priority):
            prios.append(c)
        else:
            gd.append(c.item)
    cycle = cycle_theory(spec.sections["cycle"]) if spec.has_cycle else None
    return AgentKB(
        spec.name,
        fluents=fluents,
        actions=actions,
        rules=tuple(rules),
        ics=tuple(ics),
        reactive=tuple(reactive),
        goal_rules=tuple(goal_rules),
        gd_priorities=tuple(prios),
        gd_rules=tuple(gd),
        cycle=cycle,
        config=agent_config(spec, sc),
        unreliable_pre=tuple(upre),
        unreliable_effect=tuple(ueff),
    )


def build_agent(spec: AgentSpec, sc: Scenario) -> Agent:
    kb = build_kb(spec, sc)
    nodes, cons, sigma, kb0 = [], [], [], []
    for c in spec.sections["state"]:
        if isinstance(c, Constraint):
            cons.append(c.con)
            continue
        f = c.item.head
        if f.name in ("node", "reactive_node"):
            tv, x = f.args[0], f.args[1]
            parent = f.args[2].id if len(f.args) == 3 else None
            kind = ACTION if kb.is_action(x) else GOAL
            nodes.append(Node(tv.id, x, kind, parent, f.name == "reactive_node"))
        elif f.name == "sigma" and len(f.args) == 2 and isinstance(f.args[0], TVar):
            sigma.append((f.args[0], f.args[1]))
        else:
            kb0.append(f)
    state = initial_state(kb, kb0, nodes, cons, sigma)
    cycle = kb.cycle if isinstance(kb.cycle, CycleTheory) else normal_cycle_theory()
    return Agent(state, cycle)


def _exo_item(t, line):
    if isinstance(t, Fn) and t.name == "msg" and len(t.args) == 2:
        a = t.args[1]
        if not (isinstance(a, Fn) and a.name == AT and isinstance(a.args[1], int)):
            raise ValidationError("msg(C, A[T]) needs a timed action", line)
        return ActionObs(render(t.args[0]), a.args[0], a.args[1])
    if isinstance(t, Fn) and t.name == AT and len(t.args) == 2:
        raise ValidationError("use msg(C, A[T]) for observed actions", line)
    return FluentObs(positive_part(t), not is_neg(t))


def world_script(sc: Scenario) -> WorldScript:
    w = WorldScript()
    for c in sc.world:
        f = c.item.head
        if f.name == "holds":
            if len(f.args) != 3 or not isinstance(f.args[1], int) or render(f.args[2]) not in ("true", "false"):
                raise ValidationError("holds(Fluent, Tick, true|false)", c.line)
            w.assertions.append((f.args[0], f.args[1], render(f.args[2]) == "true"))
        elif f.name in ("deny", "admit"):
            if len(f.args) not in (1, 3):
                raise ValidationError(f"{f.name}(Pattern) or {f.name}(Pattern, From, To)", c.line)
            start, end = (f.args[1], f.args[2]) if len(f.args) == 3 else (0, None)
            w.policy.append(PolicyRule(f.args[0], f.name == "admit", start, end))
        elif f.name == "exogenous":
            if not isinstance(f.args[0], int):
                raise ValidationError("exogenous tick must be an integer", c.line)
            w.exogenous.append((f.args[0], render(f.args[1]), _exo_item(f.args[2], c.line)))
    w.validate()
    return w


def build(sc: Scenario) -> tuple:
    """(agents, environment, run options) ready for ``control.run``."""
    run = sc.run_config()
    agents = [build_agent(a, sc) for a in sc.agents]
    env = Environment(
        [a.name for a in sc.agents],
        world_script(sc),
        delay=run["delay"],
        applies_effects=run["world_applies_effects"],
        tick=run["start"],
    )
    return agents, env, run


def scenario_path(name: str) -> str:
    """Path of a shipped scenario, e.g. ``setting1``."""
    here = os.path.join(os.path.dirname(__file__), "scenarios")
    return os.path.join(here, name if name.endswith(".kgp") else name + ".kgp")


__all__ = [
    "Scenario",
    "AgentSpec",
    "parse_scenario",
    "load_scenario",
    "print_scenario",
    "validate",
    "build",
    "build_agent",
    "world_script",
    "scenario_path",
    "ParseError",
]
