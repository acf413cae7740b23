"""Event calculus theory and the temporal reasoning, precondition and
effect capabilities."""

from __future__ import annotations

from typing import Sequence

from .constraints import Con
from .lp import Lit, Rule
from .syntax import parse_rules
from .terms import Fn, Var, is_fully_ground, rename_vars, resolve

EC_AXIOMS_TEXT = """\
holds_at(F, T2) <- happens(O, T1), initiates(O, T1, F), T1 < T2, not clipped(T1, F, T2).
holds_at(¬F, T2) <- happens(O, T1), terminates(O, T1, F), T1 < T2, not declipped(T1, F, T2).
holds_at(F, T) <- initially(F), 0 <= T, not clipped(0, F, T).
holds_at(¬F, T) <- initially(¬F), 0 <= T, not declipped(0, F, T).
clipped(T1, F, T2) <- happens(O, T), terminates(O, T, F), T1 <= T, T < T2.
declipped(T1, F, T2) <- happens(O, T), initiates(O, T, F), T1 <= T, T < T2.
"""

BRIDGE_TEXT = """\
holds_at(F, T2) <- observed(F, T1), T1 <= T2, not clipped(T1, F, T2).
holds_at(¬F, T2) <- observed(¬F, T1), T1 <= T2, not declipped(T1, F, T2).
happens(O, T) <- executed(O, T).
happens(O, T) <- observed(_, O[T], _).
"""

# alternative last bridge rule: action time unknown, use observation time
BRIDGE_OBSERVATION_TIME_TEXT = """\
happens(O, T) <- observed(_, O[_], T).
"""

# An observation at T overrides persistence already at T, hence T <= T2.
# With a strict bound both f and ¬f would hold at the observation time.
OBSERVATION_AXIOMS_TEXT = """\
clipped(T1, F, T2) <- observed(¬F, T), T1 <= T, T <= T2.
declipped(T1, F, T2) <- observed(F, T), T1 <= T, T <= T2.
"""

ABDUCTIVE_BRIDGE_TEXT = """\
happens(O, T) <- assume_happens(O, T).
holds_at(F, T) <- assume_holds(F, T).
"""

EC_PREDICATES = {
    ("holds_at", 2),
    ("clipped", 3),
    ("declipped", 3),
    ("happens", 2),
    ("initiates", 3),
    ("terminates", 3),
    ("initially", 1),
    ("precondition", 2),
    ("executed", 2),
    ("observed", 2),
    ("observed", 3),
    ("assume_holds", 2),
    ("assume_happens", 2),
    ("time_now", 1),
}


def _positive_fluent_var(rules: list) -> list:
    """In the axioms ``F`` ranges over positive fluents only."""
    m = {Var("F"): Var("F", True)}
    out = []
    for r in rules:
        body = tuple(
            Lit(rename_vars(b.atom, m), b.naf) if isinstance(b, Lit) else Con(b.rel, rename_vars(b.left, m), rename_vars(b.right, m))
            for b in r.body
        )
        out.append(Rule(rename_vars(r.head, m), body, r.name))
    return out


EC_AXIOMS = tuple(_positive_fluent_var(parse_rules(EC_AXIOMS_TEXT)))
BRIDGE_RULES = tuple(_positive_fluent_var(parse_rules(BRIDGE_TEXT)))
BRIDGE_OBSERVATION_TIME = tuple(parse_rules(BRIDGE_OBSERVATION_TIME_TEXT))
OBSERVATION_AXIOMS = tuple(_positive_fluent_var(parse_rules(OBSERVATION_AXIOMS_TEXT)))
ABDUCTIVE_BRIDGE = tuple(parse_rules(ABDUCTIVE_BRIDGE_TEXT))


def ec_theory(observation_time: bool = False) -> list:
    """Domain-independent axioms plus bridge rules.

    With ``observation_time`` the last bridge rule dates other agents'
    actions by the time they were observed.
    """
    bridge = list(BRIDGE_RULES)
    if observation_time:
        bridge[-1] = BRIDGE_OBSERVATION_TIME[0]
    return list(EC_AXIOMS) + bridge + list(OBSERVATION_AXIOMS)


# ------------------------------------------------------------ capabilities


def holds(state, literal, time, tc: Sequence[Con] = ()) -> dict | None:
    """Witness valuation for ``literal`` holding at ``time`` under ``tc``."""
    eng = state.kb.tr_engine(state.kb0)
    return eng.witness([Lit(Fn("holds_at", (literal, time)))] + list(tc))


def holds_ground(state, literal, t: int) -> bool:
    """Does ``literal`` hold at time constant ``t``?"""
    eng = state.kb.tr_engine(state.kb0)
    return eng.holds([Lit(Fn("holds_at", (literal, t)))])


def preconditions(state, action, time) -> list:
    """Preconditions of ``action`` as (fluent literal, time) pairs, stamped
    with the action's own time. An empty list means true."""
    eng = state.kb.tr_engine(state.kb0)
    p = Var("_P")
    out = []
    for s, _store in eng.query([Lit(Fn("precondition", (action, p)))]):
        lit = resolve(p, s)
        if lit not in out:
            out.append(lit)
    return [(lit, time) for lit in out]


def effects(state, action, t: int) -> list:
    """Fluent literals initiated (f) or terminated (¬f) by ``action`` at
    time ``t``; conditions are evaluated against the narrative at ``t``."""
    eng = state.kb.tr_engine(state.kb0)
    f = Var("_F")
    out = []
    for pred_name, wrap in (("initiates", lambda x: x), ("terminates", lambda x: Fn("neg", (x,)))):
        for s, _store in eng.query([Lit(Fn(pred_name, (action, t, f)))]):
            lit = wrap(resolve(f, s))
            if is_fully_ground(lit) and lit not in out:
                out.append(lit)
    return out
