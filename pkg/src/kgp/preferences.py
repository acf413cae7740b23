"""Logic programs with priorities and the goal decision capability.

A theory has named basic rules, priority rules ``h :: r > s <- body``
between basic rule names, auxiliary rules and an incompatibility
relation. Only applicable ground instances matter: a basic instance is
applicable when its body holds over the auxiliary part, a priority
instance when its patterns match two applicable basic names and its body
holds.

Sub-theories are compared as follows. Y beats X when Y holds a priority
r > s with r in Y and s in X, and X holds no priority s' > r' with s' in X
and r' in Y. X is admissible when it is consistent and no consistent Y
that has a conclusion incompatible with one of X's beats X.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from . import constraints as cs
from .clp import Engine
from .constraints import Con
from .lp import Lit
from .syntax import Priority
from .terms import Fn, TVar, Var, is_fully_ground, is_ground, is_neg, match, positive_part, render, resolve

SCEPTICAL = "sceptical"
CREDULOUS = "credulous"


@dataclass(frozen=True)
class Item:
    """Applicable ground rule. For priorities ``conclusion`` is
    ``(higher, lower)`` of basic names and ``kind`` is "priority"."""

    name: Hashable
    conclusion: Hashable
    kind: str = "basic"

    @property
    def higher(self):
        return self.conclusion[0]

    @property
    def lower(self):
        return self.conclusion[1]

    def __str__(self) -> str:
        if self.kind == "priority":
            return f"{render(self.name)}: {render(self.higher)} > {render(self.lower)}"
        return f"{render(self.name)}: {_show(self.conclusion)}"


def _show(c) -> str:
    return render(c) if isinstance(c, (Fn, TVar, Var, int)) else str(c)


class GroundTheory:
    """Applicable instances plus an incompatibility test on basic conclusions."""

    def __init__(self, items: Sequence[Item], incompatible: Callable[[object, object], bool]):
        self.items = tuple(items)
        self.basic = tuple(i for i in self.items if i.kind == "basic")
        self.priorities = tuple(i for i in self.items if i.kind == "priority")
        self.by_name = {i.name: i for i in self.basic}
        self._incompat = incompatible
        self._pair: dict = {}
        self._adm: dict = {}
        self._cred: dict = {}

    # ------------------------------------------------------------ pieces

    def incompatible(self, a: Item, b: Item) -> bool:
        key = (a, b)
        r = self._pair.get(key)
        if r is None:
            if a.kind == "priority" and b.kind == "priority":
                r = a.conclusion == (b.lower, b.higher)
            elif a.kind == "basic" and b.kind == "basic":
                r = bool(self._incompat(a.conclusion, b.conclusion) or self._incompat(b.conclusion, a.conclusion))
            else:
                r = False
            self._pair[key] = self._pair[(b, a)] = r
        return r

    def consistent(self, xs: Iterable[Item]) -> bool:
        xs = list(xs)
        return not any(self.incompatible(a, b) for a, b in itertools.combinations(xs, 2)) and not any(
            self.incompatible(a, a) for a in xs
        )

    def conflicts(self, xs: Iterable[Item], ys: Iterable[Item]) -> bool:
        ys = list(ys)
        return any(self.incompatible(a, b) for a in xs for b in ys)

    def beats(self, ys: Iterable[Item], xs: Iterable[Item]) -> bool:
        ys, xs = set(ys), set(xs)
        yn = {i.name for i in ys if i.kind == "basic"}
        xn = {i.name for i in xs if i.kind == "basic"}
        attack = any(h.higher in yn and h.lower in xn for h in ys if h.kind == "priority")
        if not attack:
            return False
        counter = any(h.higher in xn and h.lower in yn for h in xs if h.kind == "priority")
        return not counter

    # ------------------------------------------------------- admissibility

    def admissible(self, xs: Iterable[Item]) -> bool:
        xs = frozenset(xs)
        r = self._adm.get(xs)
        if r is None:
            r = self.consistent(xs) and self._attacker(xs) is None
            self._adm[xs] = r
        return r

    def _attacker(self, xs: frozenset):
        """A minimal consistent attacker that beats ``xs``, or None."""
        xn = {i.name for i in xs if i.kind == "basic"}
        clash = [c for c in self.items if any(self.incompatible(c, x) for x in xs)]
        if not clash:
            return None
        for h in self.priorities:
            if h.lower not in xn or h.higher not in self.by_name:
                continue
            r = self.by_name[h.higher]
            for c in clash:
                ys = {r, h, c}
                if self.consistent(ys) and self.beats(ys, xs):
                    return ys
        return None

    def derives(self, xs: Iterable[Item], alpha: Iterable) -> bool:
        concl = {i.conclusion for i in xs}
        return all(a in concl for a in alpha)

    # ---------------------------------------------------------- entailment

    def credulous(self, alpha: Sequence) -> bool:
        return self.witness(alpha) is not None

    def witness(self, alpha: Sequence) -> frozenset | None:
        """An admissible sub-theory deriving every conclusion in ``alpha``."""
        key = frozenset(alpha)
        if key in self._cred:
            return self._cred[key]
        res = None
        supports = []
        for a in key:
            s = [i for i in self.basic if i.conclusion == a]
            if not s:
                self._cred[key] = None
                return None
            supports.append(s)
        # enough to try the basis plus some priorities and their higher sides
        useful = [h for h in self.priorities if h.higher in self.by_name]
        for base in itertools.product(*supports):
            base = frozenset(base)
            if not self.consistent(base):
                continue
            for k in range(len(useful) + 1):
                for hd in itertools.combinations(useful, k):
                    xs = base | set(hd) | {self.by_name[h.higher] for h in hd}
                    if self.admissible(xs):
                        res = frozenset(xs)
                        break
                if res is not None:
                    break
            if res is not None:
                break
        self._cred[key] = res
        return res

    def sceptical(self, alpha: Sequence) -> bool:
        if not self.credulous(alpha):
            return False
        targets = [a for a in self.basic if a.conclusion in set(alpha)]
        for b in self.basic:
            if any(self.incompatible(b, a) for a in targets) and self.credulous([b.conclusion]):
                return False
        return True

    def prefers(self, alpha: Sequence, mode: str = SCEPTICAL) -> bool:
        return self.sceptical(alpha) if mode == SCEPTICAL else self.credulous(alpha)


# -------------------------------------------------------------- theories


@dataclass(frozen=True)
class PriorityTheory:
    """Basic named rules, priority rules, auxiliary rules and the rules
    defining ``incompatible/2`` over basic conclusions."""

    basic: tuple = ()
    priorities: tuple = ()
    auxiliary: tuple = ()
    incompatibility: tuple = ()
    horizon: int = cs.DEFAULT_HORIZON

    def engine(self, facts: Iterable[Fn] = ()) -> Engine:
        return Engine(list(self.auxiliary) + list(self.incompatibility), self.horizon, tuple(facts))

    def ground(self, facts: Iterable[Fn] = ()) -> GroundTheory:
        eng = self.engine(facts)
        items = []
        for k, r in enumerate(self.basic):
            for s in eng.ground_query(list(r.body)):
                head = resolve(r.head, s)
                name = resolve(r.name, s) if r.name is not None else Fn("rule", (k,))
                if is_fully_ground(head):
                    it = Item(name, head)
                    if it not in items:
                        items.append(it)
        items += priority_instances(self.priorities, items, eng)

        def incompat(a, b):
            return eng.holds([Lit(Fn("incompatible", (a, b)))])

        return GroundTheory(items, incompat)


def priority_instances(priorities: Sequence[Priority], basic: Sequence[Item], eng: Engine) -> list:
    """Ground priority instances over applicable basic rule names."""
    out = []
    names = [i.name for i in basic]
    for k, p in enumerate(priorities):
        for hi in names:
            s = match(p.higher, hi)
            if s is None:
                continue
            for lo in names:
                if lo == hi:
                    continue
                s2 = match(p.lower, lo, s)
                if s2 is None:
                    continue
                if not _holds(eng, p.body, s2):
                    continue
                name = resolve(p.name, s2) if p.name is not None else Fn("priority", (k, hi, lo))
                it = Item(name, (hi, lo), "priority")
                if it not in out:
                    out.append(it)
    return out


def _holds(eng: Engine, body, s: dict) -> bool:
    for _ in eng.ground_query(list(body), s, 1):
        return True
    return False


def admissible(theory: PriorityTheory, subset: Iterable[Item], facts: Iterable[Fn] = ()) -> bool:
    return theory.ground(facts).admissible(subset)


def prefers(theory: PriorityTheory, alpha: Sequence, mode: str = SCEPTICAL, facts: Iterable[Fn] = ()) -> bool:
    return theory.ground(facts).prefers(alpha, mode)


# ---------------------------------------------------------- goal decision


@dataclass(frozen=True)
class CandidateGoal:
    """Goal literal with time variable ``tvar`` and constraints ``tc``."""

    literal: Fn
    tvar: TVar
    tc: tuple = ()

    def __str__(self) -> str:
        tc = ", ".join(c.pretty() for c in self.tc)
        return f"<{render(self.literal)}[{render(self.tvar)}], {{{tc}}}>"


BOTTOM = "bottom"


def _with_time(lit, t):
    """``f(x)`` to ``f(x, t)``; negation stays outside."""
    if is_neg(lit):
        return Fn("neg", (_with_time(positive_part(lit), t),))
    return Fn(lit.name, lit.args + (t,))


def incompatible_goals(g1: CandidateGoal, g2: CandidateGoal, mode: str, eng: Engine, horizon: int) -> bool:
    """Weak: incompatible under every valuation satisfying both constraint
    sets. Strong: under at least one."""
    if g1.tvar == g2.tvar:
        return False
    both = list(g1.tc) + list(g2.tc)
    dnf = []
    for a, b in ((g1, g2), (g2, g1)):
        q = [Lit(Fn("incompatible", (_with_time(a.literal, a.tvar), _with_time(b.literal, b.tvar))))]
        for _s, st in eng.query(q, {}, both):
            ev = {v for v in cs.con_tvars(st) if v not in (g1.tvar, g2.tvar) and v not in cs.con_tvars(both)}
            conjs = cs.eliminate(st, ev, horizon) if ev else [list(st)]
            dnf.extend(conjs)
    if mode == "strong":
        return any(cs.satisfiable(both + list(c), horizon) for c in dnf)
    if not cs.satisfiable(both, horizon):
        return True
    return cs.valid_disjunction(both, dnf, horizon)


def gd_engine(state, now: int) -> Engine:
    """Temporal theory plus the auxiliary goal decision rules, with the
    narrative and ``time_now(now)`` as facts."""
    kb = state.kb
    cache = kb.__dict__.setdefault("_gd_cache", {})
    key = (state.kb0, now)
    eng = cache.get(key)
    if eng is None:
        if len(cache) > 32:
            cache.clear()
        prog = list(kb.tr_program().rules) + list(kb.gd_rules)
        eng = Engine(prog, kb.config.horizon, tuple(state.kb0) + (Fn("time_now", (now,)),))
        cache[key] = eng
    return eng


def candidate_goals(state, now: int, start: int | None = None) -> tuple:
    """Ground goal rule instances firing at ``now`` as (name, CandidateGoal)
    pairs in declaration order. Each gets a fresh time variable numbered from
    ``start`` (default: the state's counter)."""
    kb = state.kb
    eng = gd_engine(state, now)
    found = []
    for k, gr in enumerate(kb.goal_rules):
        for s in eng.ground_query(list(gr.body)):
            name = resolve(gr.name, s) if gr.name is not None else Fn("goal_rule", (k,))
            lit = resolve(gr.literal, s)
            tc = tuple(Con(c.rel, resolve(c.left, s), resolve(c.right, s)) for c in gr.tc)
            item = (name, gr.time, lit, tc)
            if item not in found:
                found.append(item)
    nid = state.next_id if start is None else start
    out = []
    for name, tvar, lit, tc in found:
        tv = TVar(nid)
        m = {tvar: tv} if isinstance(tvar, Var) else {}
        lit = resolve(lit, m)
        tc = tuple(Con(c.rel, resolve(c.left, m), resolve(c.right, m)) for c in tc)
        name = resolve(name, m)
        if not is_fully_ground(lit) or not all(is_ground(c.left) and is_ground(c.right) for c in tc):
            continue
        out.append((name, CandidateGoal(lit, tv, tc)))
        nid += 1
    return tuple(out)


def goal_decision(state, now: int, mode: str | None = None, start: int | None = None):
    """Set of sceptically preferred, pairwise compatible goals (a tuple of
    CandidateGoal), or BOTTOM."""
    kb = state.kb
    mode = mode or kb.config.incompat
    cands = candidate_goals(state, now, start)
    if not cands:
        return ()
    eng = gd_engine(state, now)
    horizon = kb.config.horizon
    items = [Item(name, g) for name, g in cands]
    items += priority_instances(kb.gd_priorities, items, eng)

    def incompat(a, b):
        return incompatible_goals(a, b, mode, eng, horizon)

    th = GroundTheory(items, incompat)
    goals = [g for _n, g in sorted(cands, key=lambda c: render(c[0]))]
    cred = [g for g in goals if th.credulous([g])]
    scep = [g for g in cred if th.sceptical([g])]
    for a, b in itertools.combinations(cred, 2):
        if a not in scep and b not in scep and incompat(a, b):
            return BOTTOM
    chosen: list = []
    for g in scep:
        if any(incompat(g, h) for h in chosen):
            continue
        if th.sceptical(chosen + [g]):
            chosen.append(g)
    return tuple(chosen)
