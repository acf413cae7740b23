"""Trace encoding and independent re-verification.

Two encodings: ``text`` is a readable log, ``records`` is one canonical
JSON object per line with sorted keys. Each record carries the tick, the
agent, the transition kind, its rendered input, snapshot ids of the
states before and after, and a summary of what changed.

``verify`` replays a records stream against its scenario. For every tick
it checks that the scheduled agent is the one that moved (or that it
had nothing to do), that the recorded transition is the preferred one,
recomputed by enumerating sub-theories of the ground cycle theory, and
that input, states and change summary match.
"""

from __future__ import annotations

import itertools
import json
from typing import Iterable, Sequence

from . import control as ctl
from . import transitions as tr
from .constraints import sorted_cons
from .errors import KGPError, VerificationError
from .terms import Fn, render, sort_key

SCHEMA = ("agent", "delta", "input", "kind", "post", "pre", "t")
BRUTE_LIMIT = 14


# --------------------------------------------------------------- encoding


def delta(pre, post) -> dict:
    """What a transition changed, as sorted rendered strings."""
    before = {n.id: n for n in pre.nodes}
    after = {n.id: n for n in post.nodes}
    added = [n for i, n in after.items() if i not in before or before[i] != n]
    removed = [i for i, n in before.items() if i not in after or after[i] != n]
    kb0 = sorted(set(post.kb0) - set(pre.kb0), key=sort_key)
    return {
        "kb0": [render(f) for f in kb0],
        "sigma": [f"{render(v)}={t}" for v, t in post.sigma if (v, t) not in set(pre.sigma)],
        "added": [_node(n) for n in sorted(added, key=lambda n: n.id)],
        "removed": [f"τ{i}" for i in sorted(removed)],
        "c": [str(c) for c in sorted_cons(set(post.c) - set(pre.c))],
    }


def _node(n) -> str:
    s = str(n)
    if n.parent is not None:
        s += f" < τ{n.parent}"
    if n.reactive:
        s += " reactive"
    return s


def record_dict(rec: tr.TransitionRecord, states: dict) -> dict:
    return {
        "t": rec.t,
        "agent": rec.agent,
        "kind": rec.kind,
        "input": ctl.render_input(rec.kind, rec.input),
        "pre": rec.pre,
        "post": rec.post,
        "delta": delta(states[rec.pre], states[rec.post]),
    }


def dumps(d: dict) -> str:
    return json.dumps(d, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def emit_records(trace: ctl.Trace) -> str:
    lines = [dumps(record_dict(r, trace.states)) for r in trace.records]
    if trace.error:
        lines.append(dumps({"error": trace.error}))
    return "".join(line + "\n" for line in lines)


def emit_text(trace: ctl.Trace) -> str:
    out = []
    for r in trace.records:
        d = delta(trace.states[r.pre], trace.states[r.post])
        out.append(f"{r.t:>4} {r.agent} {r.kind} {ctl.render_input(r.kind, r.input)}")
        for key, label in (("added", "+node"), ("removed", "-node"), ("c", "+C"), ("kb0", "+KB0"), ("sigma", "+Σ")):
            for x in d[key]:
                out.append(f"       {label} {x}")
    if trace.error:
        out.append(f"error: {trace.error}")
    return "".join(line + "\n" for line in out)


def emit(trace: ctl.Trace, fmt: str = "records") -> str:
    if fmt == "records":
        return emit_records(trace)
    if fmt == "text":
        return emit_text(trace)
    raise ValueError(f"unknown trace format {fmt!r}")


def parse_records(text: str) -> list:
    """Decode a records stream; raises VerificationError on bad lines."""
    out = []
    for k, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as e:
            raise VerificationError(f"line {k}: not JSON ({e.msg})") from None
        if not isinstance(d, dict):
            raise VerificationError(f"line {k}: not a record")
        if "error" in d:
            if set(d) != {"error"}:
                raise VerificationError(f"line {k}: malformed error record")
        elif tuple(sorted(d)) != SCHEMA:
            raise VerificationError(f"line {k}: fields {sorted(d)} do not match the schema")
        out.append(d)
    return out


# ------------------------------------------------- brute-force preferences


def _incompatible(gt, a, b) -> bool:
    if a.kind == "priority" and b.kind == "priority":
        return a.conclusion == (b.lower, b.higher)
    if a.kind == "basic" and b.kind == "basic":
        return bool(gt._incompat(a.conclusion, b.conclusion) or gt._incompat(b.conclusion, a.conclusion))
    return False


class BruteTheory:
    """Sub-theory semantics by exhaustive enumeration over applicable items.

    Shares the ground items and the incompatibility relation with the
    engine but none of its search."""

    def __init__(self, gt):
        self.items = list(gt.items)
        n = len(self.items)
        self.inc = [[_incompatible(gt, self.items[i], self.items[j]) for j in range(n)] for i in range(n)]
        self.subsets = [frozenset(c) for k in range(n + 1) for c in itertools.combinations(range(n), k)]
        self.consistent = [s for s in self.subsets if not any(self.inc[i][j] for i in s for j in s)]
        self._adm = None

    def _names(self, s) -> set:
        return {self.items[i].name for i in s if self.items[i].kind == "basic"}

    def beats(self, y, x) -> bool:
        yn, xn = self._names(y), self._names(x)
        ya = any(self.items[h].kind == "priority" and self.items[h].higher in yn and self.items[h].lower in xn for h in y)
        xa = any(self.items[h].kind == "priority" and self.items[h].higher in xn and self.items[h].lower in yn for h in x)
        return ya and not xa

    def admissible_sets(self) -> list:
        if self._adm is None:
            out = []
            for x in self.consistent:
                attackers = (y for y in self.consistent if any(self.inc[i][j] for i in y for j in x))
                if not any(self.beats(y, x) for y in attackers):
                    out.append(x)
            self._adm = out
        return self._adm

    def _derives(self, s, alpha) -> bool:
        concl = {self.items[i].conclusion for i in s}
        return all(a in concl for a in alpha)

    def credulous(self, alpha: Sequence) -> bool:
        return any(self._derives(s, alpha) for s in self.admissible_sets())

    def sceptical(self, alpha: Sequence) -> bool:
        if not self.credulous(alpha):
            return False
        targets = [i for i, it in enumerate(self.items) if it.kind == "basic" and it.conclusion in set(alpha)]
        for s in self.admissible_sets():
            if any(self.inc[i][j] for i in s for j in targets):
                return False
        return True


def brute_choose(gt) -> str | None:
    """Transition kind picked by the scheduler's policy, recomputed."""
    kinds = [k for k in tr.KINDS if any(ctl._kind_of(i.conclusion) == k for i in gt.basic)]
    if not kinds:
        return None
    if len(gt.items) > BRUTE_LIMIT:
        return ctl.choose(gt)[0]
    bt = BruteTheory(gt)
    goal = {k: [Fn("next", (Fn(ctl._KIND_ATOM[k]),))] for k in kinds}
    for k in kinds:
        if bt.sceptical(goal[k]):
            return k
    for k in kinds:
        if bt.credulous(goal[k]):
            return k
    return None


def expected_transition(cycle, prev, state, now: int, pending: bool):
    sit = ctl.situation(state, now, pending)
    h = state.kb.config.horizon
    for last in [prev, None] if prev is not None else [None]:
        gt = ctl.ground_cycle(cycle, list(sit.facts) + [ctl._last(last)], h)
        k = brute_choose(gt)
        if k is not None:
            return k, sit.input_for(k)
    return ctl.HALT


# ------------------------------------------------------------ verification


def verify(records: Iterable[dict], agents: Sequence[ctl.Agent], env, max_steps: int | None = None) -> int:
    """Replay ``records`` from the initial ``agents`` and ``env``; returns
    the number of records checked or raises VerificationError."""
    records = list(records)
    agents = list(agents)
    n = len(agents)
    while env.tick < 1:
        env.advance_clock()
    k = 0
    while k < len(records):
        d = records[k]
        t = env.tick
        agent = agents[(t - 1) % n]
        name = agent.state.name
        pending = env.pending(name, t)
        try:
            exp = expected_transition(agent.cycle, agent.last, agent.state, t, pending)
        except KGPError as e:
            if "error" in d and d["error"] == f"{name} at {t}: {e}":
                return k
            raise VerificationError(f"tick {t}: replay failed: {e}") from None
        if "error" in d:
            if exp == ctl.HALT:
                env.advance_clock()
                continue
            kind, inp = exp
            try:
                post = tr.apply(kind, agent.state, inp, t, env)
                tr.check_frame(kind, agent.state, post)
            except KGPError as e:
                if d["error"] == f"{name} at {t}: {e}":
                    return k
                raise VerificationError(f"tick {t}: error differs: {e}") from None
            raise VerificationError(f"tick {t}: recorded error but the step succeeds")
        if d["t"] < t:
            raise VerificationError(f"record {k + 1}: tick {d['t']} does not increase")
        if exp == ctl.HALT:
            if d["t"] == t:
                raise VerificationError(f"record {k + 1}: {name} has no enabled transition at {t}")
            env.advance_clock()
            continue
        if d["t"] != t:
            raise VerificationError(f"tick {t}: {name} should move ({exp[0]}) but the trace skips it")
        if d["agent"] != name:
            raise VerificationError(f"record {k + 1}: agent {d['agent']} moved out of turn (expected {name})")
        kind, inp = exp
        if d["kind"] != kind:
            raise VerificationError(f"record {k + 1}: {d['kind']} is not the preferred transition ({kind})")
        if d["input"] != ctl.render_input(kind, inp):
            raise VerificationError(f"record {k + 1}: input {d['input']} differs from the selection")
        pre = agent.state
        if d["pre"] != tr.snapshot(pre):
            raise VerificationError(f"record {k + 1}: pre-state does not match the replay")
        try:
            post = tr.apply(kind, pre, inp, t, env)
            tr.check_frame(kind, pre, post)
        except KGPError as e:
            raise VerificationError(f"record {k + 1}: replay failed: {e}") from None
        if d["post"] != tr.snapshot(post):
            raise VerificationError(f"record {k + 1}: post-state does not match the replay")
        if d["delta"] != delta(pre, post):
            raise VerificationError(f"record {k + 1}: change summary does not match the replay")
        agent.state, agent.last = post, kind
        env.advance_clock()
        k += 1
    if max_steps is not None and len(records) > max_steps:
        raise VerificationError(f"{len(records)} records exceed the step bound {max_steps}")
    return k
