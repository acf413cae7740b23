"""Temporal constraints over the bounded naturals 0..horizon.

Atoms are normalised to difference form ``x - y <= c`` (and ``x - y != c``)
where ``x``/``y`` are time variables or ``None`` for the constant zero.
Satisfiability uses bounds propagation plus backtracking in variable-id
order, which yields the lexicographically smallest solution.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .terms import Add, Fn, TVar, Var, is_fully_ground, make_add, render, sort_key

DEFAULT_HORIZON = 100

RELS = ("<", "<=", ">", ">=", "=", "!=")
_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
_PRETTY = {"<=": "≤", ">=": "≥", "!=": "≠"}


def default_horizon() -> int:
    """Horizon from ``KGP_HORIZON`` or the built-in default."""
    raw = os.environ.get("KGP_HORIZON")
    if raw:
        value = int(raw)
        if value < 1:
            raise ValueError("KGP_HORIZON must be >= 1")
        return value
    return DEFAULT_HORIZON


@dataclass(frozen=True, slots=True)
class Con:
    """A constraint atom ``left rel right``."""

    rel: str
    left: object
    right: object

    def __repr__(self) -> str:
        return f"{render(self.left)} {self.rel} {render(self.right)}"

    def negate(self) -> "Con":
        return Con(_NEGATE[self.rel], self.left, self.right)

    def flipped(self) -> "Con":
        return Con(_FLIP[self.rel], self.right, self.left)

    def pretty(self) -> str:
        return f"{render(self.left)} {_PRETTY.get(self.rel, self.rel)} {render(self.right)}"


def con_key(c: Con):
    return (sort_key(c.left), c.rel, sort_key(c.right))


def sorted_cons(cs: Iterable[Con]) -> tuple:
    return tuple(sorted(set(cs), key=con_key))


def map_con(c: Con, f) -> Con:
    return Con(c.rel, f(c.left), f(c.right))


def con_tvars(cs: Iterable[Con]) -> set:
    out: set = set()
    for c in cs:
        for side in (c.left, c.right):
            _collect_tvars(side, out)
    return out


def _collect_tvars(t, out: set) -> None:
    if isinstance(t, TVar):
        out.add(t)
    elif isinstance(t, Add):
        _collect_tvars(t.base, out)


def is_time_con(c: Con) -> bool:
    """True for constraints between time terms (as opposed to symbols)."""
    return _is_time_side(c.left) and _is_time_side(c.right)


def _is_time_side(t) -> bool:
    if isinstance(t, bool):
        return False
    if isinstance(t, (int, TVar)):
        return True
    if isinstance(t, Add):
        return _is_time_side(t.base)
    return False


# ------------------------------------------------------------ normal form


def _split(t) -> tuple:
    """Time term -> (variable or None, offset)."""
    if isinstance(t, int) and not isinstance(t, bool):
        return None, t
    if isinstance(t, TVar):
        return t, 0
    if isinstance(t, Add):
        v, k = _split(t.base)
        return v, k + t.k
    raise TypeError(f"not a time term: {render(t)}")


class Diff:
    """Difference-form view of a conjunction: ``le`` and ``ne`` triples."""

    __slots__ = ("le", "ne", "false")

    def __init__(self) -> None:
        self.le: list = []
        self.ne: list = []
        self.false = False

    def add(self, c: Con) -> None:
        rel, a, b = c.rel, c.left, c.right
        if rel in (">", ">="):
            rel, a, b = _FLIP[rel], b, a
        xa, oa = _split(a)
        xb, ob = _split(b)
        if rel == "<":
            self._le(xa, xb, ob - oa - 1)
        elif rel == "<=":
            self._le(xa, xb, ob - oa)
        elif rel == "=":
            self._le(xa, xb, ob - oa)
            self._le(xb, xa, oa - ob)
        elif rel == "!=":
            if xa == xb:
                if ob - oa == 0:
                    self.false = True
            else:
                self.ne.append((xa, xb, ob - oa))
        else:
            raise ValueError(rel)

    def _le(self, x, y, c: int) -> None:
        if x == y:
            if c < 0:
                self.false = True
            return
        self.le.append((x, y, c))


def to_diff(cs: Iterable[Con]) -> Diff:
    d = Diff()
    for c in cs:
        d.add(c)
    return d


def diff_to_cons(x, y, c: int, ne: bool = False) -> Con | None:
    """Render ``x - y <= c`` (or ``!= c``) as a readable constraint atom."""
    if ne:
        if x is None:
            x, y, c = y, None, -c
        return Con("!=", x, c if y is None else make_add(y, c))
    if x is None:
        # -y <= c  i.e.  y >= -c
        if -c <= 0:
            return None
        return Con(">", y, -c - 1)
    if y is None:
        return Con("<=", x, c)
    if c < 0:
        return Con("<", x, make_add(y, c + 1))
    return Con("<=", x, make_add(y, c))


# ------------------------------------------------------------------ solver


class _Infeasible(Exception):
    pass


def _propagate(lo: dict, hi: dict, le: list, ne: list) -> None:
    """Tighten bounds to a fixpoint; raise _Infeasible on wipe-out."""
    changed = True
    rounds = 0
    limit = 4 * (len(lo) + 2) * (max(hi.values(), default=0) + 2) + 16
    while changed:
        changed = False
        rounds += 1
        if rounds > limit:
            raise _Infeasible
        for x, y, c in le:
            # x - y <= c
            hx = hi[y] + c
            if hx < hi[x]:
                hi[x] = hx
                changed = True
            ly = lo[x] - c
            if ly > lo[y]:
                lo[y] = ly
                changed = True
        for x, y, c in ne:
            if lo[x] == hi[x] and lo[y] == hi[y]:
                if lo[x] - lo[y] == c:
                    raise _Infeasible
            elif lo[y] == hi[y]:
                bad = lo[y] + c
                if lo[x] == bad:
                    lo[x] += 1
                    changed = True
                if hi[x] == bad:
                    hi[x] -= 1
                    changed = True
            elif lo[x] == hi[x]:
                bad = lo[x] - c
                if lo[y] == bad:
                    lo[y] += 1
                    changed = True
                if hi[y] == bad:
                    hi[y] -= 1
                    changed = True
        for v in lo:
            if lo[v] > hi[v]:
                raise _Infeasible


def _order(v):
    return -1 if v is None else v.id


def solve(
    cs: Iterable[Con],
    pinned: Mapping | None = None,
    horizon: int = DEFAULT_HORIZON,
    variables: Iterable[TVar] = (),
) -> dict | None:
    """Lexicographically smallest valuation (by variable id) or None."""
    cs = list(cs)
    d = to_diff(cs)
    if d.false:
        return None
    vs = set(variables) | con_tvars(cs) | set(pinned or {})
    lo = {None: 0}
    hi = {None: 0}
    for v in vs:
        lo[v] = 0
        hi[v] = horizon
    for v, val in (pinned or {}).items():
        if val < 0 or val > horizon:
            return None
        lo[v] = max(lo[v], val)
        hi[v] = min(hi[v], val)
        if lo[v] > hi[v]:
            return None
    try:
        _propagate(lo, hi, d.le, d.ne)
    except _Infeasible:
        return None
    order = sorted(vs, key=_order)
    found = _search(order, 0, lo, hi, d.le, d.ne)
    if found is None:
        return None
    return {v: found[v] for v in order}


def _search(order: list, i: int, lo: dict, hi: dict, le: list, ne: list) -> dict | None:
    while i < len(order) and lo[order[i]] == hi[order[i]]:
        i += 1
    if i == len(order):
        return lo
    v = order[i]
    for val in range(lo[v], hi[v] + 1):
        lo2, hi2 = dict(lo), dict(hi)
        lo2[v] = hi2[v] = val
        try:
            _propagate(lo2, hi2, le, ne)
        except _Infeasible:
            if not ne:
                return None
            continue
        res = _search(order, i + 1, lo2, hi2, le, ne)
        if res is not None:
            return res
        if not ne:
            return None
    return None


def satisfiable(cs: Iterable[Con], horizon: int = DEFAULT_HORIZON, pinned: Mapping | None = None) -> bool:
    return solve(cs, pinned, horizon) is not None


def solutions(
    cs: Iterable[Con], variables: Iterable[TVar], horizon: int = DEFAULT_HORIZON
) -> Iterator[dict]:
    """All valuations of ``variables`` (plus constrained vars) in lexicographic order."""
    cs = list(cs)
    d = to_diff(cs)
    if d.false:
        return
    vs = sorted(set(variables) | con_tvars(cs), key=_order)
    lo = {None: 0, **{v: 0 for v in vs}}
    hi = {None: 0, **{v: horizon for v in vs}}
    try:
        _propagate(lo, hi, d.le, d.ne)
    except _Infeasible:
        return
    yield from _enumerate(vs, 0, lo, hi, d.le, d.ne)


def _enumerate(order, i, lo, hi, le, ne):
    if i == len(order):
        yield {v: lo[v] for v in order}
        return
    v = order[i]
    for val in range(lo[v], hi[v] + 1):
        lo2, hi2 = dict(lo), dict(hi)
        lo2[v] = hi2[v] = val
        try:
            _propagate(lo2, hi2, le, ne)
        except _Infeasible:
            continue
        yield from _enumerate(order, i + 1, lo2, hi2, le, ne)


def entails(cs: Iterable[Con], atom: Con, horizon: int = DEFAULT_HORIZON) -> bool:
    """Every solution of ``cs`` satisfies ``atom``."""
    cs = list(cs)
    if not satisfiable(cs, horizon):
        return True
    return not satisfiable(cs + [atom.negate()], horizon)


def valid_disjunction(
    context: Iterable[Con], dnf: Iterable[Iterable[Con]], horizon: int = DEFAULT_HORIZON
) -> bool:
    """Every solution of ``context`` satisfies some conjunct list of ``dnf``."""
    return counterexample(context, dnf, horizon) is None


def counterexample(
    context: Iterable[Con], dnf: Iterable[Iterable[Con]], horizon: int = DEFAULT_HORIZON
) -> list | None:
    """A constraint set that satisfies ``context`` and falsifies every
    disjunct of ``dnf``, or None when none exists."""
    ctx = list(context)
    conjs = [list(c) for c in dnf]
    if any(not c for c in conjs):
        return None
    if not satisfiable(ctx, horizon):
        return None
    return _refute(ctx, conjs, 0, horizon)


def _refute(ctx: list, conjs: list, i: int, horizon: int) -> list | None:
    if i == len(conjs):
        return ctx
    conj = conjs[i]
    # falsify conj: some atom false; disjoint split a1 false | a1 true, a2 false | ...
    prefix: list = []
    for atom in conj:
        branch = ctx + prefix + [atom.negate()]
        if satisfiable(branch, horizon):
            res = _refute(branch, conjs, i + 1, horizon)
            if res is not None:
                return res
        prefix.append(atom)
        if not satisfiable(ctx + prefix, horizon):
            break
    return None


# -------------------------------------------------------------- elimination


def eliminate(cs: Iterable[Con], evars: Iterable[TVar], horizon: int = DEFAULT_HORIZON) -> list:
    """Project out ``evars``: returns a DNF (list of constraint lists) over
    the remaining variables, equivalent over the integers 0..horizon."""
    evars = set(evars)
    cs = list(cs)
    if not evars & con_tvars(cs):
        return [cs] if satisfiable(cs, horizon) else []
    d = to_diff(cs)
    if d.false:
        return []
    out: list = []
    for le in _split_ne(d.le, d.ne, evars):
        keep_ne = [t for t in d.ne if t[0] not in evars and t[1] not in evars]
        res = _fm(le, evars, horizon)
        if res is None:
            continue
        conj = [diff_to_cons(x, y, c) for x, y, c in res]
        conj += [diff_to_cons(x, y, c, ne=True) for x, y, c in keep_ne]
        conj = [c for c in conj if c is not None]
        if satisfiable(conj, horizon):
            out.append(sorted_cons(conj))
    return _dedupe(out)


def _dedupe(dnf: list) -> list:
    seen = set()
    out = []
    for conj in dnf:
        key = tuple(conj)
        if key not in seen:
            seen.add(key)
            out.append(list(conj))
    return out


def _split_ne(le: list, ne: list, evars: set):
    """Case-split disequalities touching eliminated vars into < / >."""
    touching = [t for t in ne if t[0] in evars or t[1] in evars]
    if not touching:
        yield list(le)
        return

    def rec(i, acc):
        if i == len(touching):
            yield acc
            return
        x, y, c = touching[i]
        # x - y < c  or  x - y > c
        yield from rec(i + 1, acc + [(x, y, c - 1)])
        yield from rec(i + 1, acc + [(y, x, -c - 1)])

    yield from rec(0, list(le))


def _fm(le: list, evars: set, horizon: int) -> list | None:
    """Fourier-Motzkin over difference constraints with domain bounds."""
    cons = set(le)
    for v in sorted(evars, key=_order):
        if not any(v in (x, y) for x, y, _ in cons):
            continue
        cons |= {(v, None, horizon), (None, v, 0)}
        uppers = [(y, c) for x, y, c in cons if x == v]  # v - y <= c
        lowers = [(x, c) for x, y, c in cons if y == v]  # x - v <= c
        rest = {t for t in cons if v not in (t[0], t[1])}
        for x, c1 in lowers:
            for y, c2 in uppers:
                # x - v <= c1, v - y <= c2  =>  x - y <= c1 + c2
                if x == y:
                    if c1 + c2 < 0:
                        return None
                    continue
                rest.add((x, y, c1 + c2))
        cons = _tighten(rest)
        if cons is None:
            return None
    return sorted(cons, key=lambda t: (_order(t[0]), _order(t[1]), t[2]))


def _tighten(cons: set) -> set | None:
    best: dict = {}
    for x, y, c in cons:
        k = (x, y)
        if k not in best or c < best[k]:
            best[k] = c
    out = set()
    for (x, y), c in best.items():
        if (y, x) in best and c + best[(y, x)] < 0:
            return None
        out.add((x, y, c))
    return out


# -------------------------------------------------------------- evaluation


def eval_time(t, valuation: Mapping) -> int:
    if isinstance(t, int):
        return t
    if isinstance(t, TVar):
        return valuation[t]
    if isinstance(t, Add):
        return eval_time(t.base, valuation) + t.k
    raise TypeError(f"not a time term: {render(t)}")


def holds(c: Con, valuation: Mapping | None = None) -> bool:
    """Evaluate a ground (or valuated) constraint atom."""
    valuation = valuation or {}
    if is_time_con(c):
        a, b = eval_time(c.left, valuation), eval_time(c.right, valuation)
    else:
        a, b = c.left, c.right
        if c.rel == "=":
            return a == b
        if c.rel == "!=":
            return a != b
        raise TypeError(f"ordering on non-time terms: {c!r}")
    return {
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
        "=": a == b,
        "!=": a != b,
    }[c.rel]


def is_ground_con(c: Con) -> bool:
    return is_fully_ground(c.left) and is_fully_ground(c.right)


def symbolic_side(t) -> bool:
    return isinstance(t, (Fn, Var))
