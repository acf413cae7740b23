"""Constraint logic programs: rules, grounding and the stratified model.

The grounding route in this module is the reference semantics. The
top-down engine in :mod:`kgp.clp` is the fast route used by the agent
capabilities; tests check that the two agree.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from . import constraints as cs
from .constraints import Con
from .errors import GroundingExplosion, NotStratified
from .terms import (
    Add,
    Fn,
    TVar,
    Var,
    is_fully_ground,
    iter_subterms,
    make_add,
    match,
    render,
    rename_apart,
    resolve,
    term_vars,
    unify,
)

DEFAULT_CAP = 10**6


@dataclass(frozen=True, slots=True)
class Lit:
    """Body literal; ``naf`` marks negation as failure."""

    atom: Fn
    naf: bool = False

    def __repr__(self) -> str:
        return ("not " if self.naf else "") + render(self.atom)


@dataclass(frozen=True, slots=True)
class Rule:
    head: Fn
    body: tuple = ()
    name: object = None

    def __repr__(self) -> str:
        return render_rule(self)


@dataclass(frozen=True, slots=True)
class IC:
    """Integrity constraint ``body => h1 ; h2 ; ...``; an empty head is false."""

    body: tuple
    head: tuple = ()

    def __repr__(self) -> str:
        head = " ; ".join(_render_item(h) for h in self.head) or "false"
        return f"{', '.join(_render_item(b) for b in self.body)} => {head}"


def _render_item(x) -> str:
    if isinstance(x, Con):
        return repr(x)
    if isinstance(x, Lit):
        return repr(x)
    return render(x)


def render_rule(r: Rule) -> str:
    prefix = f"{render(r.name)} :: " if r.name is not None else ""
    if not r.body:
        return f"{prefix}{render(r.head)}."
    return f"{prefix}{render(r.head)} <- {', '.join(_render_item(b) for b in r.body)}."


@dataclass
class Program:
    """An ordered collection of rules with a predicate index."""

    rules: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rules = list(self.rules)
        self._index: dict | None = None

    def add(self, *rules: Rule) -> "Program":
        return Program(self.rules + list(rules))

    def index(self) -> dict:
        if self._index is None:
            idx: dict = defaultdict(list)
            for r in self.rules:
                idx[(r.head.name, len(r.head.args))].append(r)
            self._index = dict(idx)
        return self._index

    def predicates(self) -> set:
        return set(self.index())

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


def pred(atom: Fn) -> tuple:
    return (atom.name, len(atom.args))


def body_atoms(body: Iterable) -> Iterator[Fn]:
    for b in body:
        if isinstance(b, Lit):
            yield b.atom


# ------------------------------------------------------ time-position typing


def _positions(t, path=()):
    yield path, t
    if isinstance(t, Fn):
        for i, a in enumerate(t.args):
            yield from _positions(a, path + (i,))


def infer_time_positions(rules: Iterable, extra: Iterable = ()) -> dict:
    """Map predicate -> set of argument paths that carry time values.

    A path is seeded by a time constant or time variable in some rule,
    or by a variable used in an ordering constraint; it then spreads
    through shared variables until fixpoint.
    """
    rules = list(rules) + list(extra)
    tpos: dict = defaultdict(set)

    def atoms_of(r):
        if isinstance(r, Rule):
            yield r.head
            yield from body_atoms(r.body)
        elif isinstance(r, IC):
            yield from body_atoms(r.body)
            for h in r.head:
                if isinstance(h, Fn):
                    yield h
        elif isinstance(r, Fn):
            yield r

    def cons_of(r):
        items = []
        if isinstance(r, Rule):
            items = list(r.body)
        elif isinstance(r, IC):
            items = list(r.body) + list(r.head)
        return [c for c in items if isinstance(c, Con)]

    time_vars: dict = {}
    for k, r in enumerate(rules):
        tv = set()
        for c in cons_of(r):
            sides = (c.left, c.right)
            ordering = c.rel not in ("=", "!=")
            timeish = any(_timeish_side(x) for x in sides)
            for x in sides:
                for sub in iter_subterms(x) if isinstance(x, Add) else [x]:
                    if isinstance(sub, Var) and (ordering or timeish):
                        tv.add(sub)
        time_vars[k] = tv
        for a in atoms_of(r):
            for path, sub in _positions(a):
                if path and (isinstance(sub, (TVar, Add)) or (isinstance(sub, int) and not isinstance(sub, bool))):
                    tpos[pred(a)].add(path)
    changed = True
    while changed:
        changed = False
        for k, r in enumerate(rules):
            tv = time_vars[k]
            atoms = list(atoms_of(r))
            for a in atoms:
                for path, sub in _positions(a):
                    if path and isinstance(sub, Var) and path in tpos[pred(a)] and sub not in tv:
                        tv.add(sub)
                        changed = True
            for a in atoms:
                for path, sub in _positions(a):
                    if path and isinstance(sub, Var) and sub in tv and path not in tpos[pred(a)]:
                        tpos[pred(a)].add(path)
                        changed = True
    return dict(tpos)


def _timeish_side(x) -> bool:
    if isinstance(x, bool):
        return False
    return isinstance(x, (int, TVar, Add))


def time_vars_of(atom: Fn, tpos: dict) -> set:
    """Logic variables of ``atom`` sitting at time positions."""
    out = set()
    paths = tpos.get(pred(atom), ())
    for path, sub in _positions(atom):
        if path and isinstance(sub, Var) and path in paths:
            out.add(sub)
    return out


def rule_time_vars(rule: Rule, tpos: dict) -> set:
    out = set()
    for a in [rule.head, *body_atoms(rule.body)]:
        out |= time_vars_of(a, tpos)
    for c in rule.body:
        if isinstance(c, Con):
            ordering = c.rel not in ("=", "!=")
            if ordering or _timeish_side(c.left) or _timeish_side(c.right):
                for x in (c.left, c.right):
                    out |= {v for v in term_vars(x)}
    return out


# -------------------------------------------------- static stratification


def predicate_graph(rules: Iterable[Rule]) -> dict:
    """head predicate -> set of (body predicate, negative?)."""
    g: dict = defaultdict(set)
    for r in rules:
        for b in r.body:
            if isinstance(b, Lit):
                g[pred(r.head)].add((pred(b.atom), b.naf))
    return g


def negative_cycles(rules: Iterable[Rule]) -> list:
    """Predicate SCCs that contain a negative edge."""
    g = predicate_graph(rules)
    nodes = set(g) | {p for es in g.values() for p, _ in es}
    plain = {n: [p for p, _ in g.get(n, ())] for n in nodes}
    out = []
    for comp in scc(nodes, plain):
        comp_set = set(comp)
        bad = any(neg and p in comp_set for n in comp for p, neg in g.get(n, ()))
        if bad:
            out.append(sorted(comp_set))
    return out


def scc(nodes: Iterable, succ: dict) -> list:
    """Tarjan's algorithm (iterative); components in reverse topological
    order, i.e. dependencies first."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list = []
    counter = itertools.count()
    for root in sorted(nodes, key=repr):
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    pushed = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if pushed:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


# ------------------------------------------------------------- grounding


@dataclass(frozen=True, slots=True)
class GroundRule:
    head: Fn
    pos: tuple = ()
    neg: tuple = ()

    def __repr__(self) -> str:
        body = [render(a) for a in self.pos] + ["not " + render(a) for a in self.neg]
        return f"{render(self.head)}." if not body else f"{render(self.head)} <- {', '.join(body)}."


@dataclass
class GroundProgram:
    rules: list
    horizon: int
    _model: frozenset | None = None

    def __len__(self) -> int:
        return len(self.rules)

    def model(self) -> frozenset:
        if self._model is None:
            self._model = stratified_model(self.rules)
        return self._model


def vocabulary(rules: Iterable) -> list:
    """Ground non-time subterms occurring as arguments in ``rules``."""
    seen = set()
    for r in rules:
        atoms = [r.head, *body_atoms(r.body)] if isinstance(r, Rule) else []
        for a in atoms:
            for arg in a.args:
                for sub in iter_subterms(arg):
                    if isinstance(sub, Fn) and is_fully_ground(sub):
                        seen.add(sub)
    return sorted(seen, key=repr)


def ground(
    program: Program | Sequence[Rule],
    horizon: int,
    vocab: Sequence | None = None,
    cap: int = DEFAULT_CAP,
) -> GroundProgram:
    """Intelligent grounding: instances are generated only from atoms that
    may be derivable, constraint atoms are evaluated away."""
    rules = list(program)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    tpos = infer_time_positions(rules)
    vocab = list(vocab) if vocab is not None else vocabulary(rules)
    possible: dict = defaultdict(dict)
    patterns: dict = defaultdict(list)
    for r in rules:
        if not r.body and not is_fully_ground(r.head):
            patterns[pred(r.head)].append(r.head)
    out: dict = {}
    changed = True
    while changed:
        changed = False
        for r in rules:
            if not r.body and term_vars(r.head):
                continue
            tvs = rule_time_vars(r, tpos)
            for inst, used_facts in _instances(r, possible, patterns, tvs, vocab, horizon, tpos):
                for f in used_facts:
                    if f not in out:
                        out[f] = None
                        if f.head not in possible[pred(f.head)]:
                            possible[pred(f.head)][f.head] = None
                            changed = True
                if inst not in out:
                    out[inst] = None
                    if len(out) > cap:
                        raise GroundingExplosion(f"more than {cap} ground instances")
                    if inst.head not in possible[pred(inst.head)]:
                        possible[pred(inst.head)][inst.head] = None
                        changed = True
    return GroundProgram(list(out), horizon)


def _instances(rule: Rule, possible, patterns, tvs, vocab, horizon, tpos):
    pos = [b for b in rule.body if isinstance(b, Lit) and not b.naf]
    rest = [b for b in rule.body if not (isinstance(b, Lit) and not b.naf)]
    for s, used in _join(pos, 0, {}, possible, patterns, []):
        ptvs = set()
        for f in used:
            ptvs |= time_vars_of(f, tpos)
        leftover = []
        for t in [rule.head, *(b.atom if isinstance(b, Lit) else b.left for b in rest),
                  *(b.right for b in rest if isinstance(b, Con)), *(b.atom for b in pos)]:
            for v in term_vars(resolve(t, s)):
                if v not in leftover:
                    leftover.append(v)
        domains = []
        for v in leftover:
            timeish = v in tvs or v in ptvs or any(v == resolve(tv, s) for tv in tvs)
            domains.append(range(horizon + 1) if timeish else vocab)
        for values in itertools.product(*domains):
            s2 = dict(s)
            s2.update(zip(leftover, values))
            ok = True
            neg = []
            for b in rest:
                if isinstance(b, Con):
                    c = Con(b.rel, resolve(b.left, s2), resolve(b.right, s2))
                    try:
                        if not cs.holds(c):
                            ok = False
                            break
                    except TypeError:
                        ok = False
                        break
                else:
                    neg.append(resolve(b.atom, s2))
            if not ok:
                continue
            head = resolve(rule.head, s2)
            if not _in_domain(head, horizon):
                continue
            pos_atoms = tuple(resolve(b.atom, s2) for b in pos)
            facts = [GroundRule(resolve(f, s2)) for f in used]
            yield GroundRule(head, pos_atoms, tuple(neg)), facts


def _in_domain(atom, horizon) -> bool:
    for sub in iter_subterms(atom):
        if isinstance(sub, int) and not isinstance(sub, bool) and (sub < 0 or sub > horizon):
            return False
        if isinstance(sub, Var):
            return False
    return True


def _join(lits, i, s, possible, patterns, used):
    if i == len(lits):
        yield s, used
        return
    atom = resolve(lits[i].atom, s)
    p = pred(atom)
    for cand in list(possible.get(p, ())):
        s2 = match(atom, cand, s)
        if s2 is not None:
            yield from _join(lits, i + 1, s2, possible, patterns, used)
    for pat in patterns.get(p, ()):
        (pat2,), _ = rename_apart([pat])
        s2 = dict(s)
        eqs: list = []
        if unify(atom, pat2, s2, eqs) and not eqs:
            yield from _join(lits, i + 1, s2, possible, patterns, used + [pat2])


# ------------------------------------------------------- stratified model


def stratified_model(rules: Sequence[GroundRule]) -> frozenset:
    """Least model per stratum of a locally stratified ground program."""
    by_head: dict = defaultdict(list)
    for r in rules:
        by_head[r.head].append(r)
    nodes = set(by_head)
    succ = {h: [a for r in rs for a in (*r.pos, *r.neg) if a in by_head] for h, rs in by_head.items()}
    model: set = set()
    for comp in scc(nodes, succ):
        comp_set = set(comp)
        for h in comp:
            for r in by_head[h]:
                if any(a in comp_set for a in r.neg):
                    bad = {render(h)} | {render(a) for a in r.neg if a in comp_set}
                    raise NotStratified(sorted({x.split("(")[0] for x in bad}))
        crules = [r for h in comp for r in by_head[h]]
        changed = True
        while changed:
            changed = False
            for r in crules:
                if r.head in model:
                    continue
                if all(a in model for a in r.pos) and not any(a in model for a in r.neg):
                    model.add(r.head)
                    changed = True
    return frozenset(model)


def evaluate(gp: GroundProgram, query: Iterable) -> bool:
    """Truth of a conjunction of ground literals in the stratified model."""
    m = gp.model()
    for q in query:
        if isinstance(q, Con):
            if not cs.holds(q):
                return False
        elif isinstance(q, Lit):
            if (q.atom in m) == q.naf:
                return False
        elif q not in m:
            return False
    return True


def entails_by_grounding(
    program: Program | Sequence[Rule],
    atoms: Sequence,
    cons: Sequence[Con],
    horizon: int,
) -> dict | None:
    """Reference witness search: enumerate valuations in ascending order and
    test each against the grounded model."""
    tvs = sorted(cs.con_tvars(cons) | {v for a in atoms for v in _tvars_in(a)}, key=lambda v: v.id)
    gp = ground(program, horizon)
    for values in itertools.product(range(horizon + 1), repeat=len(tvs)):
        val = dict(zip(tvs, values))
        if not all(cs.holds(c, val) for c in cons):
            continue
        ground_atoms = [_subst_t(a, val) for a in atoms]
        if evaluate(gp, ground_atoms):
            return val
    return None


def _tvars_in(t):
    for sub in iter_subterms(t):
        if isinstance(sub, TVar):
            yield sub


def _subst_t(t, val):
    if isinstance(t, Lit):
        return Lit(_subst_t(t.atom, val), t.naf)
    if isinstance(t, TVar):
        return val[t]
    if isinstance(t, Fn):
        return Fn(t.name, tuple(_subst_t(a, val) for a in t.args)) if t.args else t
    if isinstance(t, Add):
        return make_add(_subst_t(t.base, val), t.k)
    return t
