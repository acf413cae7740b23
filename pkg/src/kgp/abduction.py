"""Abductive answers with constraints, planning and reactivity.

The search adds abducible atoms one at a time (iterative deepening on the
number of atoms) and lets the constraint engine work out the temporal
conditions. Each candidate set is verified symbolically: the query must
hold under every valuation of the chosen constraints, and every integrity
constraint must be unviolated under every such valuation. Violations are
repaired either by adding a constraint that excludes them or by assuming
a further atom that supplies a missing head.

``check_answer`` is an independent oracle that grounds the program for
every valuation in turn; tests run it on every answer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import constraints as cs
from .clp import Engine, fresh_internal
from .constraints import Con
from .errors import SearchBoundExceeded
from .lp import IC, Lit, Rule, _subst_t, evaluate, ground, infer_time_positions, pred
from .syntax import Located, Reactive, parse_clauses
from .temporal import ABDUCTIVE_BRIDGE, _positive_fluent_var
from .terms import Fn, TVar, Var, is_fully_ground, is_ground, is_internal, map_tvars, match, render, resolve, term_vars, unify

ABDUCIBLES = frozenset({("assume_holds", 2), ("assume_happens", 2)})
DEFAULT_BOUND = 6
NODE_LIMIT = 20000

I_PLAN_TEXT = """\
holds_at(F, T), holds_at(¬F, T) => false.
assume_happens(O, T), precondition(O, P) => holds_at(P, T).
assume_happens(O, T), not executed(O, T), time_now(T2) => T > T2.
"""


def _parse_ics(text: str) -> tuple:
    out = []
    for c in parse_clauses(text):
        ic = c.item
        (r,) = _positive_fluent_var([Rule(Fn("_ic"), ic.body)])
        out.append(IC(r.body, ic.head))
    return tuple(out)


I_PLAN = _parse_ics(I_PLAN_TEXT)


@dataclass(frozen=True)
class AbductiveProgram:
    """Rules P (narrative facts included), integrity constraints I and the
    horizon of the time domain. Abducibles are assume_holds/assume_happens."""

    rules: tuple
    ics: tuple = ()
    horizon: int = cs.DEFAULT_HORIZON
    tpos: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.tpos is None:
            object.__setattr__(self, "tpos", infer_time_positions(self.rules))

    def engine(self, facts: Iterable[Fn]) -> Engine:
        return Engine(list(self.rules), self.horizon, tuple(facts), self.tpos)


@dataclass(frozen=True)
class AbductiveAnswer:
    delta: tuple = ()
    tc: tuple = ()

    def __str__(self) -> str:
        d = ", ".join(render(a) for a in self.delta)
        c = ", ".join(x.pretty() for x in self.tc)
        return f"({{{d}}}, {{{c}}})"


# ------------------------------------------------------------------ oracle


def check_answer(
    prog: AbductiveProgram,
    query: Sequence,
    delta0: Sequence[Fn],
    c0: Sequence[Con],
    answer: AbductiveAnswer,
    horizon: int | None = None,
) -> bool:
    """Ground oracle: every valuation of the answer's variables satisfying
    the constraints must make the query true and all integrity constraints
    satisfied in the stratified model of P plus the grounded assumptions."""
    horizon = prog.horizon if horizon is None else horizon
    if set(answer.delta) & set(delta0) or set(answer.tc) & set(c0):
        return False
    delta = list(delta0) + list(answer.delta)
    cons = list(c0) + list(answer.tc)
    body = [q if isinstance(q, (Lit, Con)) else Lit(q) for q in query]
    tvs: set = set()
    for a in delta:
        tvs |= _tvs(a)
    for q in body:
        tvs |= _tvs(q.atom) if isinstance(q, Lit) else _tvs(q.left) | _tvs(q.right)
    tvs |= cs.con_tvars(cons)
    ic_rules = []
    ic_vars = []
    for k, ic in enumerate(prog.ics):
        vs = []
        for b in ic.body:
            for t in ((b.atom,) if isinstance(b, Lit) else (b.left, b.right)):
                for v in term_vars(t):
                    if v not in vs:
                        vs.append(v)
        ic_vars.append(vs)
        ic_rules.append(Rule(Fn(f"_viol{k}", tuple(vs)), tuple(ic.body)))
    base = list(prog.rules) + ic_rules
    seen = False
    for val in cs.solutions(cons, sorted(tvs, key=lambda v: v.id), horizon):
        seen = True
        facts = [Rule(_subst_t(a, val)) for a in delta]
        if any(not _in_range(f.head, horizon) for f in facts):
            return False
        gp = ground(base + facts, horizon)
        if not evaluate(gp, [_subst_t(q, val) for q in body]):
            return False
        model = gp.model()
        for k, ic in enumerate(prog.ics):
            name = f"_viol{k}"
            for atom in model:
                if atom.name != name:
                    continue
                s = dict(zip(ic_vars[k], atom.args))
                if not _head_holds(ic.head, s, model, horizon):
                    return False
    return seen


def _in_range(atom, horizon) -> bool:
    from .terms import iter_subterms

    return all(not (isinstance(x, int) and (x < 0 or x > horizon)) for x in iter_subterms(atom))


def _head_holds(head: tuple, s: dict, model, horizon: int) -> bool:
    for h in head:
        if isinstance(h, Con):
            left, right = resolve(h.left, s), resolve(h.right, s)
            free = term_vars(left) + term_vars(right)
            for values in itertools.product(range(horizon + 1), repeat=len(set(free))):
                m = dict(zip(dict.fromkeys(free), values))
                if cs.holds(Con(h.rel, resolve(left, m), resolve(right, m))):
                    return True
        else:
            pat = resolve(h, s)
            if is_fully_ground(pat):
                if pat in model:
                    return True
                continue
            for atom in model:
                if atom.name == pat.name and match(pat, atom) is not None:
                    return True
    return False


def _tvs(t) -> set:
    from .clp import _tvars_of

    return _tvars_of(t, set())


# ------------------------------------------------------------------ search


class _Search:
    def __init__(self, prog, query, delta0, c0, bound, next_id, forbid):
        self.prog = prog
        self.query = [q if isinstance(q, (Lit, Con)) else Lit(q) for q in query]
        self.delta0 = tuple(delta0)
        self.c0 = list(c0)
        self.bound = bound
        self.ids = itertools.count(next_id)
        self.forbid = set(forbid)
        self.cut = False
        self.nodes = 0
        self.horizon = prog.horizon
        self._engines: dict = {}

    def engine(self, delta: tuple) -> Engine:
        key = delta
        eng = self._engines.get(key)
        if eng is None:
            eng = self.prog.engine(self.delta0 + delta)
            self._engines[key] = eng
        return eng

    def run(self) -> AbductiveAnswer | None:
        if not cs.satisfiable(self.c0, self.horizon):
            return None
        for k in range(self.bound + 1):
            self.cut = False
            self.seen: set = set()
            res = self.dfs((), k)
            if res is not None:
                return res
            if not self.cut:
                return None
        raise SearchBoundExceeded(f"no abductive answer with at most {self.bound} assumptions")

    def tick(self):
        self.nodes += 1
        if self.nodes > NODE_LIMIT:
            raise SearchBoundExceeded("abductive search node limit reached")

    def dfs(self, delta: tuple, budget: int):
        self.tick()
        eng = self.engine(delta)
        conds = self.conditions(eng, self.query, self.c0)
        if not conds:
            if budget == 0:
                if self._has_candidates(eng, delta):
                    self.cut = True
                return None
            for q in self.query:
                if isinstance(q, Lit) and not q.naf:
                    for cand in self.candidates(eng, resolve(q.atom, {}), delta):
                        res = self.dfs(delta + (cand,), budget - 1)
                        if res is not None:
                            return res
            return None
        for conj in conds:
            tc = [c for c in conj if not cs.entails(self.c0, c, self.horizon)]
            res = self.fix(eng, delta, tc, budget)
            if res is not None:
                return res
        return None

    def _has_candidates(self, eng, delta) -> bool:
        for q in self.query:
            if isinstance(q, Lit) and not q.naf:
                for _ in self.candidates(eng, q.atom, delta):
                    return True
        return False

    def conditions(self, eng: Engine, body: list, store: list) -> list:
        """DNF over free variables under which ``body`` holds."""
        out = []
        for _s, st in eng.query(body, {}, store):
            ev = {v for v in cs.con_tvars(st) if is_internal(v)}
            dnf = cs.eliminate(st, ev, self.horizon) if ev else [list(st)]
            for conj in dnf:
                if conj not in out:
                    out.append(conj)
        return out

    def violations(self, eng: Engine, ic: IC, store: list):
        body = list(ic.body)
        body += [Lit(h, True) for h in ic.head if isinstance(h, Fn)]
        body += [h.negate() for h in ic.head if isinstance(h, Con)]
        for s, st in eng.query(body, {}, store):
            ev = {v for v in cs.con_tvars(st) if is_internal(v)}
            dnf = cs.eliminate(st, ev, self.horizon) if ev else [list(st)]
            for conj in dnf:
                yield s, conj

    def fix(self, eng: Engine, delta: tuple, tc: list, budget: int):
        key = (delta, frozenset(tc))
        if key in self.seen:
            return None
        self.seen.add(key)
        self.tick()
        store = self.c0 + tc
        if not cs.satisfiable(store, self.horizon):
            return None
        for ic in self.prog.ics:
            for s, conj in self.violations(eng, ic, store):
                # exclude the violation with one extra constraint
                for c in cs.sorted_cons(conj):
                    nc = c.negate()
                    if cs.satisfiable(store + [nc], self.horizon):
                        res = self.fix(eng, delta, tc + [nc], budget)
                        if res is not None:
                            return res
                # or supply a head atom
                heads = [resolve(h, s) for h in ic.head if isinstance(h, Fn)]
                for h in heads:
                    cands = list(self.candidates(eng, h, delta))
                    if cands and budget == 0:
                        self.cut = True
                        continue
                    for cand in cands:
                        res = self.dfs(delta + (cand,), budget - 1)
                        if res is not None:
                            return res
                return None
        return AbductiveAnswer(delta, tuple(self.prune(tc)))

    def prune(self, tc: list) -> list:
        out = list(tc)
        i = 0
        while i < len(out):
            rest = out[:i] + out[i + 1 :]
            if cs.entails(self.c0 + rest, out[i], self.horizon):
                out = rest
            else:
                i += 1
        return out

    # ------------------------------------------------------- candidates

    def fresh(self) -> TVar:
        return TVar(next(self.ids))

    def candidates(self, eng: Engine, atom: Fn, delta: tuple, depth: int = 2):
        seen = set()
        for c in self._cands(eng, atom, depth):
            shape = _shape(c)
            if shape in seen or any(_shape(d) == shape for d in delta):
                continue
            seen.add(shape)
            yield c

    def _cands(self, eng: Engine, atom: Fn, depth: int):
        if pred(atom) in ABDUCIBLES:
            what = atom.args[0]
            if is_ground(what):
                if atom.name == "assume_holds" and what in self.forbid:
                    return
                yield Fn(atom.name, (what, self.fresh()))
            return
        if atom.name == "holds_at" and len(atom.args) == 2:
            lit = atom.args[0]
            if not is_ground(lit):
                return
            if lit not in self.forbid:
                yield Fn("assume_holds", (lit, self.fresh()))
            for op in initiators(eng, lit):
                yield Fn("assume_happens", (op, self.fresh()))
            return
        if atom.name == "happens" and len(atom.args) == 2:
            if is_ground(atom.args[0]):
                yield Fn("assume_happens", (atom.args[0], self.fresh()))
            return
        if depth <= 0:
            return
        for rule in eng.index.get(pred(atom), ()):
            from .clp import _rename_rule

            head, body = _rename_rule(rule)
            s: dict = {}
            if not unify(head, atom, s, []):
                continue
            for b in body:
                if isinstance(b, Lit) and not b.naf:
                    yield from self._cands(eng, resolve(b.atom, s), depth - 1)


def _shape(atom: Fn):
    return (atom.name, atom.args[0])


def initiators(eng: Engine, lit) -> list:
    """Ground actions whose effect rules can produce ``lit``."""
    from .terms import is_neg, positive_part

    if is_neg(lit):
        goal = Fn("terminates", (Var("_O"), fresh_internal(), positive_part(lit)))
    else:
        goal = Fn("initiates", (Var("_O"), fresh_internal(), lit))
    out = []
    for inst, _st in eng.answers(goal):
        op = inst.args[0]
        if is_ground(op) and op not in out:
            out.append(op)
    return out


def abduce(
    prog: AbductiveProgram,
    query: Sequence,
    delta0: Sequence[Fn] = (),
    c0: Sequence[Con] = (),
    horizon: int | None = None,
    bound: int = DEFAULT_BOUND,
    next_id: int | None = None,
    forbid: Iterable = (),
) -> AbductiveAnswer | None:
    """Cardinality-minimal abductive answer extending (delta0, c0).

    New time variables are numbered from ``next_id`` (default: one past the
    largest id in the inputs). ``forbid`` lists fluent literals that may
    not be assumed directly. Raises SearchBoundExceeded when the bound cut
    the search without exhausting it.
    """
    if horizon is not None and horizon != prog.horizon:
        prog = AbductiveProgram(prog.rules, prog.ics, horizon, prog.tpos)
    if next_id is None:
        top = 0
        for a in list(delta0) + [q.atom if isinstance(q, Lit) else q for q in query if not isinstance(q, Con)]:
            top = max([top] + [v.id for v in _tvs(a)])
        top = max([top] + [v.id for v in cs.con_tvars(c0)] + [v.id for q in query if isinstance(q, Con) for v in cs.con_tvars([q])])
        next_id = top + 1
    ans = _Search(prog, query, delta0, c0, bound, next_id, forbid).run()
    return None if ans is None else _renumber(ans, next_id)


def _renumber(ans: AbductiveAnswer, start: int) -> AbductiveAnswer:
    """Number new time variables consecutively from ``start`` in order of
    appearance: assumed goals first, then actions, then constraints."""
    goals = [a for a in ans.delta if a.name == "assume_holds"]
    acts = [a for a in ans.delta if a.name != "assume_holds"]
    m: dict = {}
    nid = start
    for v in [a.args[1] for a in goals + acts] + [
        v for c in ans.tc for v in sorted(cs.con_tvars([c]), key=lambda v: v.id)
    ]:
        if isinstance(v, TVar) and v.id >= start and v not in m:
            m[v] = TVar(nid)
            nid += 1
    delta = tuple(map_tvars(a, m) for a in goals + acts)
    tc = tuple(cs.map_con(c, lambda t: map_tvars(t, m)) for c in ans.tc)
    return AbductiveAnswer(delta, tc)


# -------------------------------------------------------- capabilities


@dataclass(frozen=True)
class PlanResult:
    """New forest items as (content, kind, time variable) and constraints."""

    items: tuple
    tc: tuple


def _reactive_rules(reactive: Sequence[Reactive]) -> tuple:
    rules, ics = [], []
    for k, rc in enumerate(reactive):
        used = set(term_vars(rc.reaction))
        for c in rc.tc:
            used |= set(term_vars(c.left)) | set(term_vars(c.right))
        vs = []
        for b in rc.body:
            for t in ((b.atom,) if isinstance(b, Lit) else (b.left, b.right)):
                for v in term_vars(t):
                    if v in used and v not in vs:
                        vs.append(v)
        head = Fn(f"reaction_{k}", tuple(vs))
        rules.append(Rule(head, (Lit(rc.reaction),) + tuple(rc.tc)))
        if rc.reaction.name == "assume_happens":
            a, t = rc.reaction.args
            rules.append(Rule(head, (Lit(Fn("executed", (a, t))),) + tuple(rc.tc)))
        ics.append(IC(tuple(rc.body), (head,)))
    return tuple(rules), tuple(ics)


def _program(state, now: int, reactive: bool) -> AbductiveProgram:
    kb = state.kb
    key = ("react" if reactive else "plan", now, state.kb0)
    cache = kb.__dict__.setdefault("_abd_cache", {})
    prog = cache.get(key)
    if prog is not None:
        return prog
    from .temporal import ec_theory

    rules = ec_theory(kb.config.unknown_action_time) + list(ABDUCTIVE_BRIDGE) + list(kb.rules)
    ics = list(I_PLAN) + list(kb.ics)
    if reactive:
        rr, ri = _reactive_rules(kb.reactive)
        rules += list(rr)
        ics += list(ri)
    rules += [Rule(f) for f in state.kb0]
    rules.append(Rule(Fn("time_now", (now,))))
    tpos_key = ("tpos", reactive)
    tpos = cache.get(tpos_key)
    if tpos is None:
        tpos = infer_time_positions(rules)
        cache[tpos_key] = tpos
    prog = AbductiveProgram(tuple(rules), tuple(ics), kb.config.horizon, tpos)
    if len(cache) > 32:
        cache.clear()
        cache[tpos_key] = tpos
    cache[key] = prog
    return prog


def _delta0(nodes) -> tuple:
    out = []
    for n in nodes:
        name = "assume_happens" if n.is_action else "assume_holds"
        out.append(Fn(name, (n.content, n.tvar)))
    return tuple(out)


def plan_problem(state, node_id: int, now: int) -> tuple:
    """(program, query, delta0, c0, forbid) for planning the given leaf."""
    node = state.node(node_id)
    prog = _program(state, now, False)
    others = [n for n in state.nodes if n.id != node_id]
    delta0 = _delta0(others)
    query = [Lit(Fn("holds_at", (node.content, node.tvar)))]
    return prog, query, delta0, list(state.store()), (node.content,)


def react_problem(state, now: int) -> tuple:
    prog = _program(state, now, True)
    delta0 = _delta0(state.nodes_of(reactive=False))
    return prog, [], delta0, list(state.store()), ()


def _result(answer: AbductiveAnswer) -> PlanResult:
    items = tuple(
        (a.args[0], "goal" if a.name == "assume_holds" else "action", a.args[1]) for a in answer.delta
    )
    return PlanResult(items, answer.tc)


def plan(state, node_id: int, now: int, bound: int | None = None) -> PlanResult | None:
    """Partial plan for the mental goal at leaf ``node_id``; None is failure."""
    prog, query, delta0, c0, forbid = plan_problem(state, node_id, now)
    bound = state.kb.config.delta_bound if bound is None else bound
    ans = abduce(prog, query, delta0, c0, bound=bound, next_id=state.next_id, forbid=forbid)
    return None if ans is None else _result(ans)


def react(state, now: int, bound: int | None = None) -> PlanResult | None:
    """Reactions required by the reactive constraints; None is failure."""
    prog, query, delta0, c0, _ = react_problem(state, now)
    bound = state.kb.config.delta_bound if bound is None else bound
    ans = abduce(prog, query, delta0, c0, bound=bound, next_id=state.next_id)
    return None if ans is None else _result(ans)
