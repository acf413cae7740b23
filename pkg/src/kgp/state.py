"""Agent state: narrative, goal forest, constraint store and bindings."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from . import constraints as cs
from .constraints import Con
from .errors import InconsistentObservation, UnknownNode, ValidationError
from .kb import AgentKB
from .lp import Lit
from .terms import Fn, TVar, is_fully_ground, is_neg, positive_part, render, timed

GOAL = "goal"
ACTION = "action"


@dataclass(frozen=True)
class Node:
    """A goal or action in the forest; ``id`` is also its time variable."""

    id: int
    content: Fn
    kind: str = GOAL
    parent: int | None = None
    reactive: bool = False

    @property
    def tvar(self) -> TVar:
        return TVar(self.id)

    @property
    def timed(self) -> Fn:
        return timed(self.content, self.tvar)

    @property
    def is_action(self) -> bool:
        return self.kind == ACTION

    def __str__(self) -> str:
        return render(self.timed)


@dataclass(frozen=True)
class AgentState:
    kb: AgentKB = field(compare=False)
    kb0: tuple = ()
    nodes: tuple = ()
    c: tuple = ()
    sigma: tuple = ()  # sorted (TVar, int) pairs
    next_id: int = 1

    # ------------------------------------------------------------ lookups

    @property
    def name(self) -> str:
        return self.kb.name

    def node(self, nid: int) -> Node:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise UnknownNode(f"no node τ{nid}")

    def has_node(self, nid: int) -> bool:
        return any(n.id == nid for n in self.nodes)

    def sigma_map(self) -> dict:
        return dict(self.sigma)

    def sigma_cons(self) -> list:
        return [Con("=", v, t) for v, t in self.sigma]

    def store(self) -> list:
        """C together with the Σ bindings as equalities."""
        return list(self.c) + self.sigma_cons()

    def roots(self, reactive: bool | None = None) -> list:
        return [n for n in self.nodes if n.parent is None and (reactive is None or n.reactive == reactive)]

    def nodes_of(self, reactive: bool | None = None) -> list:
        if reactive is None:
            return list(self.nodes)
        return [n for n in self.nodes if n.reactive == reactive]

    # ----------------------------------------------------------- updates

    def fresh(self) -> tuple:
        """A fresh node id and the state that has consumed it."""
        return self.next_id, replace(self, next_id=self.next_id + 1)

    def with_nodes(self, nodes: Iterable[Node]) -> "AgentState":
        return replace(self, nodes=tuple(sorted(nodes, key=lambda n: n.id)))

    def add_nodes(self, new: Iterable[Node]) -> "AgentState":
        new = list(new)
        top = max([self.next_id - 1] + [n.id for n in new])
        return replace(self, nodes=tuple(sorted(list(self.nodes) + new, key=lambda n: n.id)), next_id=top + 1)

    def add_constraints(self, tc: Iterable[Con]) -> "AgentState":
        cur = list(self.c)
        seen = set(cur)
        for c in tc:
            if c not in seen:
                seen.add(c)
                cur.append(c)
        return replace(self, c=tuple(cur))

    def add_kb0(self, facts: Iterable[Fn]) -> "AgentState":
        cur = list(self.kb0)
        seen = set(cur)
        for f in facts:
            if not is_fully_ground(f):
                raise ValidationError(f"narrative fact is not ground: {render(f)}")
            if f in seen:
                continue
            if f.name == "observed" and len(f.args) == 2:
                opp = Fn("observed", (_complement(f.args[0]), f.args[1]))
                if opp in seen:
                    raise InconsistentObservation(f"{render(f)} contradicts {render(opp)}")
            seen.add(f)
            cur.append(f)
        return replace(self, kb0=tuple(cur))

    def bind(self, pairs: Iterable[tuple]) -> "AgentState":
        m = dict(self.sigma)
        for v, t in pairs:
            if v in m and m[v] != t:
                raise ValidationError(f"{render(v)} already bound to {m[v]}")
            m[v] = t
        return replace(self, sigma=tuple(sorted(m.items(), key=lambda p: p[0].id)))


def _complement(lit):
    return positive_part(lit) if is_neg(lit) else Fn("neg", (lit,))


def initial_state(kb: AgentKB, kb0=(), nodes=(), c=(), sigma=()) -> AgentState:
    nodes = tuple(sorted(nodes, key=lambda n: n.id))
    top = max([0] + [n.id for n in nodes] + [v.id for v, _ in sigma] + [v.id for x in c for v in cs.con_tvars([x])])
    st = AgentState(kb, (), nodes, tuple(c), (), top + 1)
    st = st.add_kb0(kb0)
    return st.bind(sigma)


def fresh_time_var(state: AgentState) -> tuple:
    """Returns (TVar, new state); ids increase monotonically."""
    nid, st = state.fresh()
    return TVar(nid), st


# --------------------------------------------------------------- navigation


def children(state: AgentState, nid: int) -> list:
    state.node(nid)
    return [n for n in state.nodes if n.parent == nid]


def parent(state: AgentState, nid: int) -> Node | None:
    p = state.node(nid).parent
    return None if p is None else state.node(p)


def ancestors(state: AgentState, nid: int) -> list:
    out = []
    p = state.node(nid).parent
    while p is not None:
        n = state.node(p)
        out.append(n)
        p = n.parent
    return out


def siblings(state: AgentState, nid: int) -> list:
    n = state.node(nid)
    if n.parent is None:
        return []
    return [m for m in state.nodes if m.parent == n.parent and m.id != nid]


def descendants(state: AgentState, nid: int) -> list:
    out = []
    todo = [nid]
    while todo:
        cur = todo.pop()
        for m in children(state, cur):
            out.append(m)
            todo.append(m.id)
    return sorted(out, key=lambda m: m.id)


def is_leaf(state: AgentState, nid: int) -> bool:
    state.node(nid)
    return not any(n.parent == nid for n in state.nodes)


def root_of(state: AgentState, nid: int) -> Node:
    anc = ancestors(state, nid)
    return anc[-1] if anc else state.node(nid)


_RELATIONS = {
    "parent": lambda s, i: set() if parent(s, i) is None else {parent(s, i).id},
    "children": lambda s, i: {n.id for n in children(s, i)},
    "ancestors": lambda s, i: {n.id for n in ancestors(s, i)},
    "siblings": lambda s, i: {n.id for n in siblings(s, i)},
    "descendants": lambda s, i: {n.id for n in descendants(s, i)},
    "leaf": is_leaf,
}


def navigate(state: AgentState, nid: int, relation: str):
    """Tree relation lookup by name; ``leaf`` gives a bool, the rest id sets."""
    try:
        fn = _RELATIONS[relation]
    except KeyError:
        raise ValueError(f"unknown relation {relation!r}") from None
    return fn(state, nid)


# ------------------------------------------------------ temporal predicates


def achieved(state: AgentState, literal, tvar: TVar, now: int) -> bool:
    """Some valuation consistent with C and Σ puts ``tvar`` at or before
    ``now`` and makes ``literal`` hold there."""
    store = state.store() + [Con("<=", tvar, now)]
    eng = state.kb.tr_engine(state.kb0)
    if not eng.sat(store):
        return False
    return eng.holds([Lit(Fn("holds_at", (literal, tvar)))], store)


def timed_out(state: AgentState, tvar: TVar, now: int) -> bool:
    """No valuation consistent with C and Σ puts ``tvar`` after ``now``."""
    return not cs.satisfiable(state.store() + [Con(">", tvar, now)], state.kb.config.horizon)


# ------------------------------------------------------------ well-formedness


def check_wellformed(state: AgentState) -> None:
    """Raises ValidationError if the forest or stores are malformed."""
    ids = [n.id for n in state.nodes]
    if len(ids) != len(set(ids)):
        raise ValidationError("duplicate node ids")
    byid = {n.id: n for n in state.nodes}
    for n in state.nodes:
        if n.id >= state.next_id:
            raise ValidationError(f"node τ{n.id} not below the id counter")
        if n.parent is not None:
            p = byid.get(n.parent)
            if p is None:
                raise ValidationError(f"node τ{n.id} has a missing parent")
            if p.is_action:
                raise ValidationError(f"action τ{p.id} has children")
            if p.reactive != n.reactive:
                raise ValidationError(f"node τ{n.id} is in a tree of the other partition")
    seen = {}
    for v, t in state.sigma:
        if v in seen:
            raise ValidationError(f"{render(v)} bound twice")
        seen[v] = t
    if not cs.satisfiable(state.store(), state.kb.config.horizon):
        raise ValidationError("C with Σ is unsatisfiable")
