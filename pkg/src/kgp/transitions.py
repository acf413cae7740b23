"""State transitions and the selection operators that feed them.

Every transition is a function of the state, its input and the current
time. Transitions that touch the world (POI, AOI, AE) also take the
environment, whose sensing and actuating calls are their only side effect.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Sequence

from . import constraints as cs
from .abduction import plan, react
from .constraints import Con
from .environment import ActionObs, FluentObs
from .errors import EmptyInput, InconsistentObservation, NotALeaf, ValidationError
from .preferences import BOTTOM, goal_decision
from .state import ACTION, GOAL, AgentState, Node, achieved, ancestors, children, is_leaf, timed_out
from .temporal import effects, holds_ground, preconditions
from .terms import AT, Fn, TVar, is_neg, neg, positive_part, render, sort_key

GI, RE, PI, SI, AE, AOI, SR, POI = "GI", "RE", "PI", "SI", "AE", "AOI", "SR", "POI"
KINDS = (GI, RE, PI, SI, AE, AOI, SR, POI)  # also the tie-break order
EMPTY_INPUT = frozenset({GI, RE, SR, POI})


@dataclass(frozen=True)
class TransitionRecord:
    """One applied transition ``T(S, X, S', t)`` for agent ``agent``."""

    agent: str
    kind: str
    input: tuple
    pre: str
    post: str
    t: int


def snapshot(state: AgentState) -> str:
    """Short content digest identifying a state."""
    h = hashlib.sha256(describe(state).encode("utf-8"))
    return h.hexdigest()[:12]


def describe(state: AgentState) -> str:
    kb0 = sorted(render(f) for f in state.kb0)
    nodes = [f"{n.id}:{n.kind}:{n.parent}:{int(n.reactive)}:{render(n.content)}" for n in state.nodes]
    c = sorted(x.pretty() for x in state.c)
    sig = [f"{render(v)}={t}" for v, t in state.sigma]
    return "\n".join(["kb0", *kb0, "F", *nodes, "C", *c, "S", *sig, f"next {state.next_id}"])


def _top_id(items, tc, start: int) -> int:
    ids = [start - 1] + [tv.id for _x, _k, tv in items if isinstance(tv, TVar)]
    ids += [v.id for v in cs.con_tvars(tc)]
    return max(ids) + 1


# ------------------------------------------------------------------- GI


def gi(state: AgentState, now: int, variant: str | None = None) -> AgentState:
    variant = variant or state.kb.config.gi_mode
    gs = goal_decision(state, now)
    if gs == BOTTOM or not gs:
        return state
    nxt = max([state.next_id - 1] + [g.tvar.id for g in gs]) + 1
    if variant == "merge":
        merged = _gi_merge(state, gs, nxt)
        if merged is not None:
            return merged
    elif variant != "replace":
        raise ValueError(f"unknown GI variant {variant!r}")
    nodes = [Node(g.tvar.id, g.literal, GOAL) for g in gs]
    tc = [c for g in gs for c in g.tc]
    st = replace(state, c=(), next_id=nxt).with_nodes(nodes)
    return st.add_constraints(tc)


def _gi_merge(state: AgentState, gs, nxt: int) -> AgentState | None:
    h = state.kb.config.horizon
    base = state.store()
    base_sat = cs.satisfiable(base, h)
    roots = state.roots(reactive=False)
    used: set = set()
    kept, fresh, new_c = [], [], []
    for g in gs:
        hit = None
        for r in roots:
            if r.id in used or r.content != g.literal:
                continue
            extra = list(g.tc) + [Con("=", g.tvar, r.tvar)]
            if cs.satisfiable(base + extra, h) == base_sat:
                hit = (r, extra)
                break
        if hit is None:
            fresh.append(g)
        else:
            used.add(hit[0].id)
            kept.append(hit[0].id)
            new_c.extend(hit[1])
    if not cs.satisfiable(base + new_c, h):
        return None
    keep = set()
    for rid in kept:
        keep.add(rid)
        keep.update(n.id for n in _subtree(state, rid))
    nodes = [n for n in state.nodes if n.id in keep]
    nodes += [Node(g.tvar.id, g.literal, GOAL) for g in fresh]
    st = replace(state, next_id=nxt).with_nodes(nodes)
    return st.add_constraints([c for g in fresh for c in g.tc] + new_c)


def _subtree(state: AgentState, nid: int) -> list:
    out, todo = [], [nid]
    while todo:
        cur = todo.pop()
        for m in children(state, cur):
            out.append(m)
            todo.append(m.id)
    return out


# ------------------------------------------------------------------- RE


def re(state: AgentState, now: int) -> AgentState:
    res = react(state, now)
    nr = state.nodes_of(reactive=False)
    if res is None:
        return state.with_nodes(nr)
    new = [Node(tv.id, x, ACTION if k == "action" else GOAL, None, True) for x, k, tv in res.items]
    st = replace(state, next_id=_top_id(res.items, res.tc, state.next_id)).with_nodes(nr + new)
    return st.add_constraints(res.tc)


# ------------------------------------------------------------------- PI


def pi(state: AgentState, goal: int, now: int) -> AgentState:
    g = state.node(goal)
    if g.is_action:
        raise ValidationError(f"τ{goal} is an action, not a goal")
    if not is_leaf(state, goal):
        raise NotALeaf(f"τ{goal} has children")
    if state.kb.is_sensing_fluent(g.content):
        nid, st = state.fresh()
        sense = Node(nid, Fn("sense", (g.content,)), ACTION, g.parent, g.reactive)
        st = st.add_nodes([sense])
        return st.add_constraints([Con("<=", sense.tvar, g.tvar)])
    res = plan(state, goal, now)
    if res is None:
        return state
    new = [Node(tv.id, x, ACTION if k == "action" else GOAL, goal, g.reactive) for x, k, tv in res.items]
    st = replace(state, next_id=_top_id(res.items, res.tc, state.next_id)).add_nodes(new)
    return st.add_constraints(res.tc)


# ------------------------------------------------------------------- SI


def si(state: AgentState, sps: Sequence[tuple], now: int) -> AgentState:
    """``sps`` holds (precondition literal, action node id) pairs."""
    if not sps:
        raise EmptyInput("SI needs at least one precondition")
    st = state
    tc = []
    for lit, aid in sps:
        a = st.node(aid)
        if not a.is_action:
            raise ValidationError(f"τ{aid} is not an action")
        if not is_leaf(st, aid):
            raise NotALeaf(f"τ{aid} has children")
        nid, st = st.fresh()
        st = st.add_nodes([Node(nid, Fn("sense", (lit,)), ACTION, a.parent, a.reactive)])
        tc.append(Con("<", TVar(nid), a.tvar))
    return st.add_constraints(tc)


# ------------------------------------------------------- POI, AOI, AE


def _observations(obs, now: int, fluents_only: bool = False) -> list:
    facts = []
    seen: dict = {}
    for o in obs:
        if isinstance(o, FluentObs):
            if seen.get(o.fluent, o.value) != o.value:
                raise InconsistentObservation(f"{render(o.fluent)} sensed both true and false")
            seen[o.fluent] = o.value
            lit = o.fluent if o.value else neg(o.fluent)
            facts.append(Fn("observed", (lit, now)))
        elif isinstance(o, ActionObs) and not fluents_only:
            facts.append(Fn("observed", (Fn(o.agent), Fn(AT, (o.action, o.time)), now)))
    return facts


def poi(state: AgentState, now: int, env) -> AgentState:
    obs = env.sensing(state.name, [], now)
    return state.add_kb0(_observations(obs, now))


def aoi(state: AgentState, sfs: Sequence, now: int, env) -> AgentState:
    if not sfs:
        raise EmptyInput("AOI needs at least one fluent")
    obs = env.sensing(state.name, [positive_part(f) for f in sfs], now)
    return state.add_kb0(_observations(obs, now, fluents_only=True))


def _is_action_sense(x) -> bool:
    return isinstance(x, Fn) and x.name == "did" and len(x.args) == 2


def ae(state: AgentState, sas: Sequence[int], now: int, env) -> AgentState:
    """Execute the action nodes ``sas``."""
    if not sas:
        raise EmptyInput("AE needs at least one action")
    nodes = [state.node(i) for i in sas]
    for n in nodes:
        if not n.is_action:
            raise ValidationError(f"τ{n.id} is not an action")
    sense = [n for n in nodes if n.content.name == "sense" and len(n.content.args) == 1]
    acts = [n for n in nodes if n not in sense]
    fsense = [n for n in sense if not _is_action_sense(n.content.args[0])]
    asense = [n for n in sense if _is_action_sense(n.content.args[0])]
    facts, bind = [], []

    if acts:
        wanted = []
        for n in acts:
            if n.content not in wanted:
                wanted.append(n.content)
        eff = lambda a, t: effects(state, a, t)  # noqa: E731
        done = env.actuating(state.name, wanted, now, eff)
        for n in acts:
            if n.content in done:
                facts.append(Fn("executed", (n.content, now)))
                bind.append((n.tvar, now))

    if fsense:
        targets = [positive_part(n.content.args[0]) for n in fsense]
        obs = env.sensing(state.name, targets, now)
        facts += _observations(obs, now, fluents_only=True)
        resolved = {o.fluent for o in obs if isinstance(o, FluentObs)}
        for n in fsense:
            if positive_part(n.content.args[0]) in resolved:
                bind.append((n.tvar, now))

    if asense:
        h = state.kb.config.horizon
        for n in asense:
            obs = env.sensing(state.name, [n.content.args[0]], now)
            for o in obs:
                if not isinstance(o, ActionObs):
                    continue
                if cs.satisfiable(state.store() + [Con("=", n.tvar, o.time)], h):
                    facts.append(Fn("observed", (Fn(o.agent), Fn(AT, (o.action, o.time)), now)))
                    bind.append((n.tvar, o.time))
                    break

    st = state.add_kb0(facts)
    return st.bind(bind)


# ------------------------------------------------------------------- SR


@dataclass(frozen=True)
class NodeFacts:
    """What SR needs to know about each node, computed once."""

    timed_out: frozenset
    done: frozenset  # achieved goals and executed actions
    justifies: frozenset  # (sense node, sibling) pairs satisfying the sensing condition


def executed_bound(state: AgentState, n: Node) -> bool:
    """``executed(x, t)`` is in KB₀ with ``τ = t`` in Σ. A sensing action
    leaves an observation instead, so its Σ binding alone counts."""
    sig = state.sigma_map()
    t = sig.get(n.tvar)
    if t is None:
        return False
    if n.content.name == "sense" and len(n.content.args) == 1:
        return True
    return Fn("executed", (n.content, t)) in state.kb0


def _sense_target(n: Node):
    if n.is_action and n.content.name == "sense" and len(n.content.args) == 1:
        x = n.content.args[0]
        return None if _is_action_sense(x) else x
    return None


def sr_facts(state: AgentState, now: int) -> NodeFacts:
    h = state.kb.config.horizon
    store = state.store()
    tout, done, just = set(), set(), set()
    for n in state.nodes:
        if timed_out(state, n.tvar, now):
            tout.add(n.id)
        if n.is_action:
            if executed_bound(state, n):
                done.add(n.id)
        elif achieved(state, n.content, n.tvar, now):
            done.add(n.id)
    for n in state.nodes:
        lit = _sense_target(n)
        if lit is None or n.parent is None:
            continue
        for y in state.nodes:
            if y.parent != n.parent or y.id == n.id:
                continue
            if y.is_action:
                pre = [p for p, _t in preconditions(state, y.content, y.tvar)]
                if lit in pre and cs.entails(store, Con("<", n.tvar, y.tvar), h):
                    just.add((n.id, y.id))
            elif y.content == lit and state.kb.is_sensing_fluent(lit):
                if cs.entails(store, Con("<=", n.tvar, y.tvar), h):
                    just.add((n.id, y.id))
    return NodeFacts(frozenset(tout), frozenset(done), frozenset(just))


def sr_keep(nodes: Sequence[Node], facts: NodeFacts) -> frozenset:
    """Largest set of node ids meeting the revision conditions, by pruning
    violators until nothing changes."""
    byid = {n.id: n for n in nodes}
    keep = {
        n.id
        for n in nodes
        if n.id not in facts.timed_out and n.id not in facts.done
    }
    sensing = {n.id for n in nodes if _sense_target(n) is not None and n.parent is not None}
    changed = True
    while changed:
        changed = False
        for nid in sorted(keep):
            n = byid[nid]
            sibs = [m.id for m in nodes if m.parent is not None and m.parent == n.parent and m.id != nid]
            ok = n.parent is None or n.parent in keep
            ok = ok and all(s in keep or s in facts.done for s in sibs)
            if ok and nid in sensing:
                ok = any(s in keep for s in sibs if (nid, s) in facts.justifies)
            if not ok:
                keep.discard(nid)
                changed = True
    return frozenset(keep)


def sr(state: AgentState, now: int) -> AgentState:
    keep = sr_keep(state.nodes, sr_facts(state, now))
    return state.with_nodes([n for n in state.nodes if n.id in keep])


# ---------------------------------------------------------- selection


def _done(state: AgentState, n: Node, t: int) -> bool:
    if n.is_action:
        return executed_bound(state, n)
    return achieved(state, n.content, n.tvar, t)


def _feasible_context(state: AgentState, n: Node, t: int) -> bool:
    """No ancestor timed out or achieved, and no child of an ancestor timed
    out without having been executed or achieved first."""
    for a in ancestors(state, n.id):
        if timed_out(state, a.tvar, t) or achieved(state, a.content, a.tvar, t):
            return False
        for c in children(state, a.id):
            if c.id != n.id and timed_out(state, c.tvar, t) and not _done(state, c, t):
                return False
    return True


def select_goal(state: AgentState, t: int) -> tuple:
    """At most one selectable goal id, the smallest."""
    for n in state.nodes:
        if n.is_action or not is_leaf(state, n.id):
            continue
        if timed_out(state, n.tvar, t) or achieved(state, n.content, n.tvar, t):
            continue
        if _feasible_context(state, n, t):
            return (n.id,)
    return ()


def _complement(lit):
    return positive_part(lit) if is_neg(lit) else neg(lit)


def executable(state: AgentState, t: int) -> list:
    """Leaf actions that could be executed at ``t``, in id order."""
    h = state.kb.config.horizon
    out = []
    for n in state.nodes:
        if not n.is_action or not is_leaf(state, n.id):
            continue
        if not cs.satisfiable(state.store() + [Con("=", n.tvar, t)], h):
            continue
        if executed_bound(state, n):
            continue
        if not _feasible_context(state, n, t):
            continue
        pre = preconditions(state, n.content, n.tvar)
        if any(holds_ground(state, _complement(p), t) for p, _tv in pre):
            continue
        out.append(n)
    return out


def select_actions(state: AgentState, t: int) -> tuple:
    """Greedy jointly executable subset of the executable actions.

    Candidates are tried in precedence order: an action the constraints
    force strictly before another comes first, ties by id.
    """
    h = state.kb.config.horizon
    store = state.store()
    cands = executable(state, t)

    def before(n):
        return sum(1 for m in cands if m.id != n.id and cs.entails(store, Con("<", m.tvar, n.tvar), h))

    chosen: list = []
    pins: list = []
    for n in sorted(cands, key=lambda n: (before(n), n.id)):
        trial = pins + [Con("=", n.tvar, t)]
        if cs.satisfiable(store + trial, h):
            chosen.append(n.id)
            pins = trial
    return tuple(sorted(chosen))


def select_effects(state: AgentState, now: int, epsilon: int | None = None) -> tuple:
    eps = state.kb.config.epsilon if epsilon is None else epsilon
    if eps < 1:
        raise ValueError("epsilon must be at least 1")
    bound = set(state.sigma_map().values())
    out: list = []
    for f in state.kb0:
        if f.name != "executed" or len(f.args) != 2:
            continue
        a, t1 = f.args
        if t1 not in bound or not now - eps < t1 < now:
            continue
        for lit in effects(state, a, t1):
            p = positive_part(lit)
            if p not in out:
                out.append(p)
    return tuple(sorted(out, key=sort_key))


def select_preconditions(state: AgentState, t: int) -> tuple:
    """(precondition literal, action id) pairs not known to hold at ``t``."""
    out = []
    for n in executable(state, t):
        for p, _tv in preconditions(state, n.content, n.tvar):
            if not holds_ground(state, p, t):
                out.append((p, n.id))
    return tuple(out)


# ------------------------------------------------------------ dispatch


def apply(kind: str, state: AgentState, inp: tuple, now: int, env=None) -> AgentState:
    if kind == GI:
        return gi(state, now)
    if kind == RE:
        return re(state, now)
    if kind == PI:
        if len(inp) != 1:
            raise ValidationError("PI takes exactly one goal")
        return pi(state, inp[0], now)
    if kind == SI:
        return si(state, inp, now)
    if kind == POI:
        return poi(state, now, env)
    if kind == AOI:
        return aoi(state, inp, now, env)
    if kind == AE:
        return ae(state, inp, now, env)
    if kind == SR:
        return sr(state, now)
    raise ValueError(f"unknown transition {kind!r}")


_TOUCHES = {
    GI: {"nodes", "c", "next_id"},
    RE: {"nodes", "c", "next_id"},
    PI: {"nodes", "c", "next_id"},
    SI: {"nodes", "c", "next_id"},
    POI: {"kb0"},
    AOI: {"kb0"},
    AE: {"kb0", "sigma"},
    SR: {"nodes"},
}


def check_frame(kind: str, before: AgentState, after: AgentState) -> None:
    """Raises ValidationError if ``kind`` changed a component it must not."""
    for part in ("kb0", "nodes", "c", "sigma", "next_id"):
        if part not in _TOUCHES[kind] and getattr(before, part) != getattr(after, part):
            raise ValidationError(f"{kind} changed {part}")
