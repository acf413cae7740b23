"""Top-down constraint logic programming engine.

Goals are solved by SLD resolution with delayed selection. Answers are
returned as (instance, constraint store) pairs, so a goal with time
variables yields the conditions under which it holds rather than a list
of ground instances. Negation as failure is constructive: the negation of
the (projected) answer disjunction is added to the store. Answers are
tabled per goal variant and positive loops are resolved by iterating to
a fixpoint.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from . import constraints as cs
from .constraints import Con
from .errors import Floundering, NotStratified
from .lp import Lit, Program, Rule, infer_time_positions, pred, time_vars_of
from .terms import (
    INTERNAL_BASE,
    Add,
    Fn,
    TVar,
    Var,
    is_internal,
    is_timeish,
    make_add,
    render,
    resolve,
    term_vars,
    unify,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

_internal_ids = itertools.count(2 * INTERNAL_BASE)
_rule_vars = itertools.count()


def fresh_internal() -> TVar:
    return TVar(next(_internal_ids))


@dataclass
class _Frame:
    key: object
    naf_level: int
    partial: list
    looped: bool = False
    incomplete: bool = False


def _tvars_of(t, acc: set) -> set:
    if isinstance(t, TVar):
        acc.add(t)
    elif isinstance(t, Fn):
        for a in t.args:
            _tvars_of(a, acc)
    elif isinstance(t, Add):
        _tvars_of(t.base, acc)
    return acc


def store_tvars(store: Iterable[Con]) -> set:
    return cs.con_tvars(store)


class Engine:
    """Evaluates goals against a program plus a set of extra facts."""

    def __init__(
        self,
        program: Program | Sequence[Rule],
        horizon: int,
        facts: Iterable[Fn] = (),
        tpos: dict | None = None,
    ):
        self.program = program if isinstance(program, Program) else Program(list(program))
        self.horizon = horizon
        self.facts = tuple(facts)
        idx = {k: list(v) for k, v in self.program.index().items()}
        for f in self.facts:
            idx.setdefault(pred(f), []).append(Rule(f))
        self.index = idx
        self.tpos = tpos if tpos is not None else infer_time_positions(self.program.rules)
        self.cache: dict = {}
        self._frames: list = []
        self._naf_level = 0
        self._sat_cache: dict = {}

    # ------------------------------------------------------------ public

    def query(self, body: Sequence, subst: dict | None = None, store: Sequence[Con] = ()) -> Iterator[tuple]:
        """Solve a conjunction of literals and constraints; yields
        (substitution, store) pairs."""
        store = tuple(store)
        if store and not self.sat(store):
            return
        yield from self._body(list(body), dict(subst or {}), store)

    def answers(self, goal: Fn) -> list:
        """All answers for ``goal`` as (instance, store), freshly renamed."""
        canon, back_vars, back_t = _canon(goal)
        key = canon
        cached = self.cache.get(key)
        if cached is None:
            cached = self._tabled(key, canon)
        return [_rename_answer(inst, st, back_vars, back_t) for inst, st in cached]

    def holds(self, body: Sequence, store: Sequence[Con] = ()) -> bool:
        for _ in self.query(body, {}, store):
            return True
        return False

    def ground_query(self, body: Sequence, subst: dict | None = None, limit: int = 1000) -> Iterator[dict]:
        """Like ``query`` but every answer is expanded into the ground
        instances of its internal time variables (at most ``limit`` per
        answer). Yields substitutions whose values contain no internal
        variables."""
        for s, store in self.query(body, subst):
            vals: set = set()
            for v in s.values():
                _tvars_of(v, vals)
            vals |= store_tvars(store)
            evars = sorted((v for v in vals if is_internal(v)), key=lambda v: v.id)
            if not evars:
                yield s
                continue
            for k, val in enumerate(cs.solutions(store, evars, self.horizon)):
                if k >= limit:
                    break
                yield {var: _eval_t(resolve(t, s), val) for var, t in s.items()}

    def witness(self, body: Sequence) -> dict | None:
        """Lexicographically smallest valuation of the body's time
        variables (by id) under which the body holds, or None."""
        qvars: set = set()
        for b in body:
            if isinstance(b, Lit):
                _tvars_of(b.atom, qvars)
            else:
                _tvars_of(b.left, qvars)
                _tvars_of(b.right, qvars)
        order = sorted(qvars, key=lambda v: v.id)
        best = None
        for _s, store in self.query(body):
            val = cs.solve(store, None, self.horizon, order)
            if val is None:
                continue
            cand = tuple(val[v] for v in order)
            if best is None or cand < best:
                best = cand
        return None if best is None else dict(zip(order, best))

    def sat(self, store: Sequence[Con]) -> bool:
        key = frozenset(store)
        r = self._sat_cache.get(key)
        if r is None:
            r = cs.satisfiable(store, self.horizon)
            if len(self._sat_cache) > 200_000:
                self._sat_cache.clear()
            self._sat_cache[key] = r
        return r

    # ----------------------------------------------------------- tabling

    def _tabled(self, key, canon: Fn) -> list:
        for i, fr in enumerate(self._frames):
            if fr.key == key:
                if self._naf_level > fr.naf_level:
                    preds = {f.key.name for f in self._frames[i:]}
                    raise NotStratified(preds)
                fr.looped = True
                for later in self._frames[i + 1 :]:
                    later.incomplete = True
                return fr.partial
        frame = _Frame(key, self._naf_level, [])
        self._frames.append(frame)
        try:
            while True:
                res = self._compute(canon)
                if not frame.looped or set(res) == set(frame.partial):
                    break
                frame.partial = res
                frame.looped = False
        finally:
            self._frames.pop()
        if not frame.incomplete:
            self.cache[key] = res
        elif self._frames:
            self._frames[-1].incomplete = True
        return res

    def _compute(self, goal: Fn) -> list:
        out: list = []
        seen: set = set()
        for rule in self.index.get(pred(goal), ()):
            head, body = _rename_rule(rule)
            s: dict = {}
            eqs: list = []
            if not unify(head, goal, s, eqs):
                continue
            store = self._eq_cons(eqs, s)
            if store is None:
                continue
            if store and not self.sat(store):
                continue
            for s2, st in self._body(list(body), s, tuple(store)):
                inst = resolve(goal, s2)
                for ans in self._finish(inst, st):
                    if ans not in seen:
                        seen.add(ans)
                        out.append(ans)
        return out

    def _finish(self, inst: Fn, store: tuple) -> list:
        keep = _tvars_of(inst, set())
        evars = {v for v in store_tvars(store) if is_internal(v) and v not in keep}
        if evars:
            dnf = cs.eliminate(store, evars, self.horizon)
        else:
            dnf = [list(store)]
        return [_normalize_answer(inst, conj) for conj in dnf]

    # ------------------------------------------------------- body solving

    def _body(self, goals: list, s: dict, store: tuple) -> Iterator[tuple]:
        if not goals:
            yield s, store
            return
        i, level = self._select(goals, s)
        if i is None:
            raise Floundering("cannot select from: " + ", ".join(_show(g, s) for g in goals))
        lit = goals[i]
        rest = goals[:i] + goals[i + 1 :]
        if isinstance(lit, Con):
            for s2, st2 in self._con(lit, s, store):
                yield from self._body(rest, s2, st2)
        elif lit.naf:
            for s2, st2 in self._naf(lit.atom, s, store):
                yield from self._body(rest, s2, st2)
        else:
            atom = resolve(lit.atom, s)
            for inst, st in self.answers(atom):
                s2 = dict(s)
                eqs: list = []
                if not unify(atom, inst, s2, eqs):
                    continue
                extra = self._eq_cons(eqs, s2)
                if extra is None:
                    continue
                new = store + tuple(st) + tuple(extra)
                if (st or extra) and not self.sat(new):
                    continue
                yield from self._body(rest, s2, new)

    def _select(self, goals: list, s: dict) -> tuple:
        later = None
        for i, g in enumerate(goals):
            lvl = self._readiness(g, s)
            if lvl == 0:
                return i, 0
            if lvl == 1 and later is None:
                later = i
        return later, 1

    def _readiness(self, g, s: dict):
        if isinstance(g, Lit):
            if not g.naf:
                return 0
            atom = resolve(g.atom, s)
            vs = term_vars(atom)
            if not vs:
                return 0
            tv = time_vars_of(atom, self.tpos)
            return 1 if all(v in tv for v in vs) else None
        left, right = resolve(g.left, s), resolve(g.right, s)
        lv, rv = term_vars(left), term_vars(right)
        if not lv and not rv:
            return 0
        if g.rel == "=" and (isinstance(left, Var) or isinstance(right, Var)):
            return 0
        if g.rel not in ("=", "!="):
            return 1
        other = right if lv else left
        if lv and rv:
            return None
        return 1 if is_timeish(other) or isinstance(other, Add) else None

    def _con(self, c: Con, s: dict, store: tuple) -> Iterator[tuple]:
        left, right = resolve(c.left, s), resolve(c.right, s)
        if c.rel == "=" and (isinstance(left, Var) or isinstance(right, Var)):
            s2 = dict(s)
            eqs: list = []
            if not unify(left, right, s2, eqs):
                return
            extra = self._eq_cons(eqs, s2)
            if extra is None:
                return
            new = store + tuple(extra)
            if extra and not self.sat(new):
                return
            yield s2, new
            return
        symbolic = isinstance(left, Fn) or isinstance(right, Fn)
        if symbolic:
            if term_vars(left) or term_vars(right):
                raise Floundering(f"non-ground symbolic constraint {_show(c, s)}")
            if c.rel == "=":
                if left == right:
                    yield s, store
            elif c.rel == "!=":
                if left != right:
                    yield s, store
            else:
                raise TypeError(f"ordering constraint on symbols: {_show(c, s)}")
            return
        s2 = dict(s)
        for v in term_vars(left) + term_vars(right):
            if v not in s2:
                s2[v] = fresh_internal()
        atom = Con(c.rel, resolve(left, s2), resolve(right, s2))
        if not cs.is_time_con(atom):
            return
        if isinstance(atom.left, int) and isinstance(atom.right, int):
            if cs.holds(atom):
                yield s2, store
            return
        new = store + (atom,)
        if self.sat(new):
            yield s2, new

    def _eq_cons(self, eqs: list, s: dict) -> list | None:
        out = []
        for a, b in eqs:
            a, b = resolve(a, s), resolve(b, s)
            for v in term_vars(a) + term_vars(b):
                if v not in s:
                    s[v] = fresh_internal()
            a, b = resolve(a, s), resolve(b, s)
            if isinstance(a, int) and isinstance(b, int):
                if a != b:
                    return None
                continue
            if a == b:
                continue
            out.append(Con("=", a, b))
        return out

    def _naf(self, atom: Fn, s: dict, store: tuple) -> Iterator[tuple]:
        atom = resolve(atom, s)
        s2 = s
        vs = term_vars(atom)
        if vs:
            s2 = dict(s)
            for v in vs:
                s2[v] = fresh_internal()
            atom = resolve(atom, s2)
        self._naf_level += 1
        try:
            answers = self.answers(atom)
        finally:
            self._naf_level -= 1
        dnf = []
        outer = _tvars_of(atom, set())
        for inst, st in answers:
            u: dict = {}
            eqs: list = []
            if not unify(atom, inst, u, eqs):
                continue
            extra = self._eq_cons(eqs, u)
            if extra is None:
                continue
            conj = list(st) + extra
            evars = {v for v in store_tvars(conj) if v not in outer and is_internal(v)}
            if evars:
                dnf.extend(cs.eliminate(conj, evars, self.horizon))
            else:
                if self.sat(conj):
                    dnf.append(conj)
            if any(not c for c in dnf):
                return
        for st2 in self._negate(dnf, 0, list(store)):
            yield s2, tuple(st2)

    def _negate(self, dnf: list, i: int, store: list) -> Iterator[list]:
        if i == len(dnf):
            yield store
            return
        conj = [c for c in dnf[i]]
        prefix: list = []
        for atom in conj:
            branch = store + prefix + [atom.negate()]
            if self.sat(branch):
                yield from self._negate(dnf, i + 1, branch)
            prefix.append(atom)
            if not self.sat(store + prefix):
                break


# ----------------------------------------------------------------- helpers


def _eval_t(t, val: dict):
    if isinstance(t, TVar):
        return val.get(t, t)
    if isinstance(t, Fn):
        return Fn(t.name, tuple(_eval_t(a, val) for a in t.args)) if t.args else t
    if isinstance(t, Add):
        return make_add(_eval_t(t.base, val), t.k)
    return t


def _show(g, s) -> str:
    if isinstance(g, Con):
        return f"{render(resolve(g.left, s))} {g.rel} {render(resolve(g.right, s))}"
    return ("not " if g.naf else "") + render(resolve(g.atom, s))


def _rename_rule(rule: Rule) -> tuple:
    if not rule.body and not term_vars(rule.head):
        return rule.head, ()
    m: dict = {}

    def rv(t):
        if isinstance(t, Var):
            if t not in m:
                m[t] = Var(f"_V{next(_rule_vars)}", t.positive)
            return m[t]
        if isinstance(t, Fn):
            return Fn(t.name, tuple(rv(a) for a in t.args)) if t.args else t
        if isinstance(t, Add):
            return make_add(rv(t.base), t.k)
        return t

    head = rv(rule.head)
    body = []
    for b in rule.body:
        if isinstance(b, Lit):
            body.append(Lit(rv(b.atom), b.naf))
        else:
            body.append(Con(b.rel, rv(b.left), rv(b.right)))
    return head, tuple(body)


def _canon(goal: Fn) -> tuple:
    vmap: dict = {}
    tmap: dict = {}

    def walk(t):
        if isinstance(t, Var):
            if t not in vmap:
                vmap[t] = Var(f"_C{len(vmap)}", t.positive)
            return vmap[t]
        if isinstance(t, TVar):
            if is_internal(t) or t.id < 0:
                if t not in tmap:
                    tmap[t] = TVar(-1 - len(tmap))
                return tmap[t]
            return t
        if isinstance(t, Fn):
            return Fn(t.name, tuple(walk(a) for a in t.args)) if t.args else t
        if isinstance(t, Add):
            return make_add(walk(t.base), t.k)
        return t

    canon = walk(goal)
    back_vars = {v: k for k, v in vmap.items()}
    back_t = {v: k for k, v in tmap.items()}
    return canon, back_vars, back_t


def _normalize_answer(inst: Fn, conj) -> tuple:
    """Renumber answer-local variables so equal answers compare equal."""
    tmap: dict = {}
    vmap: dict = {}

    def walk(t):
        if isinstance(t, TVar):
            if is_internal(t):
                if t not in tmap:
                    tmap[t] = TVar(INTERNAL_BASE + len(tmap))
                return tmap[t]
            return t
        if isinstance(t, Var):
            if not t.name.startswith("_C"):
                if t not in vmap:
                    vmap[t] = Var(f"_A{len(vmap)}", t.positive)
                return vmap[t]
            return t
        if isinstance(t, Fn):
            return Fn(t.name, tuple(walk(a) for a in t.args)) if t.args else t
        if isinstance(t, Add):
            return make_add(walk(t.base), t.k)
        return t

    inst2 = walk(inst)
    store = cs.sorted_cons(Con(c.rel, walk(c.left), walk(c.right)) for c in conj)
    return inst2, store


def _rename_answer(inst: Fn, store: tuple, back_vars: dict, back_t: dict) -> tuple:
    fresh_t: dict = {}
    fresh_v: dict = {}

    def walk(t):
        if isinstance(t, TVar):
            if t.id < 0:
                return back_t[t]
            if is_internal(t):
                if t not in fresh_t:
                    fresh_t[t] = fresh_internal()
                return fresh_t[t]
            return t
        if isinstance(t, Var):
            if t in back_vars:
                return back_vars[t]
            if t not in fresh_v:
                fresh_v[t] = Var(f"_V{next(_rule_vars)}", t.positive)
            return fresh_v[t]
        if isinstance(t, Fn):
            return Fn(t.name, tuple(walk(a) for a in t.args)) if t.args else t
        if isinstance(t, Add):
            return make_add(walk(t.base), t.k)
        return t

    return walk(inst), tuple(Con(c.rel, walk(c.left), walk(c.right)) for c in store)


# ----------------------------------------------------------- entailment


def entails_lp_r(
    program: Program | Sequence[Rule],
    atoms: Sequence,
    cons: Sequence[Con] = (),
    horizon: int | None = None,
    facts: Iterable[Fn] = (),
) -> dict | None:
    """Smallest witness valuation (by variable id) for ``atoms`` and
    ``cons``, or None. ``atoms`` may mix plain atoms and literals."""
    horizon = cs.default_horizon() if horizon is None else horizon
    body = [a if isinstance(a, (Lit, Con)) else Lit(a) for a in atoms] + list(cons)
    return Engine(program, horizon, facts).witness(body)
