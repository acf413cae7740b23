"""Terms, substitutions and time-aware unification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

MAX_DEPTH = 8

# internal (engine-made) time variables live above this id so they sort last
INTERNAL_BASE = 1_000_000_000


@dataclass(frozen=True, slots=True)
class Var:
    """A rule-level logic variable.

    ``positive`` marks variables that only range over positive fluents
    (the ``F`` of the event-calculus axioms).
    """

    name: str
    positive: bool = False

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class TVar:
    """A time variable with a numeric id."""

    id: int

    def __repr__(self) -> str:
        return render(self)


@dataclass(frozen=True, slots=True)
class Fn:
    """Compound term; constants are nullary."""

    name: str
    args: tuple = ()

    def __repr__(self) -> str:
        return render(self)


@dataclass(frozen=True, slots=True)
class Add:
    """``base + k`` for a time term base."""

    base: object
    k: int

    def __repr__(self) -> str:
        return render(self)


Term = Union[Var, TVar, Fn, Add, int]

AT = "@"  # functor of a timed action a[t]
NEG = "neg"


def const(name: str) -> Fn:
    return Fn(name)


def fn(name: str, *args) -> Fn:
    return Fn(name, tuple(args))


def neg(t: Term) -> Fn:
    if isinstance(t, Fn) and t.name == NEG and len(t.args) == 1:
        return t.args[0]
    return Fn(NEG, (t,))


def is_neg(t: Term) -> bool:
    return isinstance(t, Fn) and t.name == NEG and len(t.args) == 1


def positive_part(t: Term) -> Term:
    return t.args[0] if is_neg(t) else t


def timed(action: Term, time: Term) -> Fn:
    return Fn(AT, (action, time))


def is_internal(t: Term) -> bool:
    return isinstance(t, TVar) and t.id >= INTERNAL_BASE


def is_timeish(t: Term) -> bool:
    return isinstance(t, (int, TVar, Add)) and not isinstance(t, bool)


def depth(t: Term) -> int:
    if isinstance(t, Fn) and t.args:
        return 1 + max(depth(a) for a in t.args)
    if isinstance(t, Add):
        return 1 + depth(t.base)
    return 0


def make_add(base: Term, k: int) -> Term:
    """Normalise ``base + k``."""
    if k == 0:
        return base
    if isinstance(base, int):
        return base + k
    if isinstance(base, Add):
        return make_add(base.base, base.k + k)
    return Add(base, k)


# ---------------------------------------------------------------- variables


def term_vars(t: Term, acc: list | None = None) -> list:
    """Logic variables of ``t`` in first-occurrence order."""
    if acc is None:
        acc = []
    if isinstance(t, Var):
        if t not in acc:
            acc.append(t)
    elif isinstance(t, Fn):
        for a in t.args:
            term_vars(a, acc)
    elif isinstance(t, Add):
        term_vars(t.base, acc)
    return acc


def tvars(t: Term, acc: set | None = None) -> set:
    if acc is None:
        acc = set()
    if isinstance(t, TVar):
        acc.add(t)
    elif isinstance(t, Fn):
        for a in t.args:
            tvars(a, acc)
    elif isinstance(t, Add):
        tvars(t.base, acc)
    return acc


def is_ground(t: Term) -> bool:
    """No logic variables (time variables are allowed)."""
    if isinstance(t, Var):
        return False
    if isinstance(t, Fn):
        return all(is_ground(a) for a in t.args)
    if isinstance(t, Add):
        return is_ground(t.base)
    return True


def is_fully_ground(t: Term) -> bool:
    """No logic variables and no time variables."""
    if isinstance(t, (Var, TVar)):
        return False
    if isinstance(t, Fn):
        return all(is_fully_ground(a) for a in t.args)
    if isinstance(t, Add):
        return is_fully_ground(t.base)
    return True


# ------------------------------------------------------------ substitution


def walk(t: Term, s: dict) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def resolve(t: Term, s: dict) -> Term:
    """Apply substitution ``s`` fully."""
    t = walk(t, s)
    if isinstance(t, Fn):
        if not t.args:
            return t
        return Fn(t.name, tuple(resolve(a, s) for a in t.args))
    if isinstance(t, Add):
        return make_add(resolve(t.base, s), t.k)
    return t


def map_tvars(t: Term, m: dict) -> Term:
    """Replace time variables according to ``m`` (TVar -> term)."""
    if isinstance(t, TVar):
        return m.get(t, t)
    if isinstance(t, Fn):
        if not t.args:
            return t
        return Fn(t.name, tuple(map_tvars(a, m) for a in t.args))
    if isinstance(t, Add):
        return make_add(map_tvars(t.base, m), t.k)
    return t


def rename_vars(t: Term, m: dict) -> Term:
    """Replace logic variables according to ``m`` (Var -> term)."""
    if isinstance(t, Var):
        return m.get(t, t)
    if isinstance(t, Fn):
        if not t.args:
            return t
        return Fn(t.name, tuple(rename_vars(a, m) for a in t.args))
    if isinstance(t, Add):
        return make_add(rename_vars(t.base, m), t.k)
    return t


def unify(a: Term, b: Term, s: dict, eqs: list) -> bool:
    """Unify under ``s`` (mutated). Time terms that are not syntactically
    equal produce equality constraints appended to ``eqs``."""
    a = walk(a, s)
    b = walk(b, s)
    if a == b and type(a) is type(b):
        return True
    if isinstance(a, Var):
        return _bind(a, b, s)
    if isinstance(b, Var):
        return _bind(b, a, s)
    if isinstance(a, Fn) and isinstance(b, Fn):
        if a.name != b.name or len(a.args) != len(b.args):
            return False
        for x, y in zip(a.args, b.args):
            if not unify(x, y, s, eqs):
                return False
        return True
    if is_timeish(a) and is_timeish(b):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        eqs.append((resolve(a, s), resolve(b, s)))
        return True
    return False


def _bind(v: Var, t: Term, s: dict) -> bool:
    if v.positive and is_neg(t):
        return False
    if isinstance(t, Var):
        if t.positive and not v.positive:
            s[v] = t
            return True
    if occurs(v, t, s):
        return False
    s[v] = t
    return True


def occurs(v: Var, t: Term, s: dict) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    if isinstance(t, Fn):
        return any(occurs(v, a, s) for a in t.args)
    if isinstance(t, Add):
        return occurs(v, t.base, s)
    return False


def match(pattern: Term, t: Term, s: dict | None = None) -> dict | None:
    """One-way syntactic matching of ``pattern`` onto ``t``."""
    s = dict(s or {})
    stack = [(pattern, t)]
    while stack:
        p, x = stack.pop()
        if isinstance(p, Var):
            if p in s:
                if s[p] != x:
                    return None
            else:
                if p.positive and is_neg(x):
                    return None
                s[p] = x
        elif isinstance(p, Fn):
            if not isinstance(x, Fn) or p.name != x.name or len(p.args) != len(x.args):
                return None
            stack.extend(zip(p.args, x.args))
        elif isinstance(p, Add):
            if not isinstance(x, Add) or p.k != x.k:
                return None
            stack.append((p.base, x.base))
        elif p != x or type(p) is not type(x):
            return None
    return s


class Fresh:
    """Monotone id source for fresh variables."""

    def __init__(self, start: int = 1):
        self._it = itertools.count(start)

    def next(self) -> int:
        return next(self._it)


_var_counter = itertools.count()


def fresh_var(prefix: str = "_G") -> Var:
    return Var(f"{prefix}{next(_var_counter)}")


def rename_apart(terms: Iterable[Term]) -> tuple[list, dict]:
    """Rename logic variables in ``terms`` apart from everything else."""
    m: dict = {}
    out = []
    for t in terms:
        for v in term_vars(t):
            if v not in m:
                m[v] = Var(f"_R{next(_var_counter)}", v.positive)
        out.append(rename_vars(t, m))
    return out, m


# ----------------------------------------------------------------- ordering


def sort_key(t: Term):
    """Total order over terms used for deterministic output."""
    if isinstance(t, bool):
        return (0, int(t))
    if isinstance(t, int):
        return (0, t)
    if isinstance(t, TVar):
        return (1, t.id)
    if isinstance(t, Add):
        return (2, sort_key(t.base), t.k)
    if isinstance(t, Var):
        return (3, t.name)
    return (4, t.name, len(t.args), tuple(sort_key(a) for a in t.args))


# ---------------------------------------------------------------- rendering


def render_tvar(v: TVar) -> str:
    if v.id >= INTERNAL_BASE:
        return f"τ_{v.id - INTERNAL_BASE}"
    return f"τ{v.id}"


def render(t: Term) -> str:
    if isinstance(t, bool):
        return str(int(t))
    if isinstance(t, int):
        return str(t)
    if isinstance(t, TVar):
        return render_tvar(t)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Add):
        if t.k < 0:
            return f"{render(t.base)}-{-t.k}"
        return f"{render(t.base)}+{t.k}"
    if t.name == NEG and len(t.args) == 1:
        return "¬" + render(t.args[0])
    if t.name == AT and len(t.args) == 2:
        return f"{render(t.args[0])}[{render(t.args[1])}]"
    if not t.args:
        return _quote(t.name)
    return f"{_quote(t.name)}({', '.join(render(a) for a in t.args)})"


def _quote(name: str) -> str:
    if name and (name[0].islower() and name.replace("_", "a").isalnum()):
        return name
    if name in ("[]",):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Fn):
        for a in t.args:
            yield from iter_subterms(a)
    elif isinstance(t, Add):
        yield from iter_subterms(t.base)
