"""Simulated world behind the sensing and actuating capabilities.

The world is a script: timed fluent assertions, an actuation policy and
exogenous events. Communication actions ``tell(Sender, Receiver, Content,
Dialogue)`` are carried to the receiver after a fixed delay.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import ValidationError
from .terms import Fn, Var, is_fully_ground, is_neg, match, positive_part, render, sort_key

DEFAULT_DELAY = 2


@dataclass(frozen=True)
class FluentObs:
    """``f : true`` or ``f : false``."""

    fluent: Fn
    value: bool

    def __str__(self) -> str:
        return f"{render(self.fluent)}:{'true' if self.value else 'false'}"


@dataclass(frozen=True)
class ActionObs:
    """``c : a[t]``, agent ``c`` performed ``a`` at ``t``."""

    agent: str
    action: Fn
    time: int

    def __str__(self) -> str:
        return f"{self.agent}:{render(self.action)}[{self.time}]"


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    action: Fn
    sent: int
    due: int

    def __post_init__(self):
        if self.due < self.sent:
            raise ValidationError("message delivered before it was sent")


@dataclass(frozen=True)
class Rule:
    """Actuation policy entry: actions matching ``pattern`` within
    ``[start, end]`` are admitted or denied."""

    pattern: Fn
    admit: bool
    start: int = 0
    end: int | None = None

    def applies(self, action, t: int) -> bool:
        if t < self.start or (self.end is not None and t > self.end):
            return False
        return match(self.pattern, action) is not None


@dataclass
class WorldScript:
    assertions: list = field(default_factory=list)  # (fluent, from_tick, bool)
    policy: list = field(default_factory=list)  # Rule
    exogenous: list = field(default_factory=list)  # (tick, agent, FluentObs | ActionObs)

    def validate(self) -> None:
        seen = {}
        for f, t, v in self.assertions:
            if is_neg(f) or not is_fully_ground(f):
                raise ValidationError(f"world fluent must be a ground positive fluent: {render(f)}")
            key = (f, t)
            if key in seen and seen[key] != v:
                raise ValidationError(f"{render(f)} asserted both true and false at {t}")
            seen[key] = v

    def value(self, fluent, t: int) -> bool | None:
        """Latest scripted value of ``fluent`` at or before ``t``."""
        best = None
        for f, start, v in self.assertions:
            if f == fluent and start <= t and (best is None or start >= best[0]):
                best = (start, v)
        return None if best is None else best[1]

    def admits(self, action, t: int) -> bool:
        verdict = True
        for r in self.policy:
            if r.applies(action, t):
                verdict = r.admit
        return verdict


class Environment:
    """Shared clock, message transport and world script for a set of agents."""

    def __init__(
        self,
        agents: Sequence[str],
        world: WorldScript | None = None,
        delay: int = DEFAULT_DELAY,
        applies_effects: bool = False,
        tick: int = 0,
    ):
        self.agents = list(agents)
        self.world = world or WorldScript()
        self.world.validate()
        self.delay = delay
        self.applies_effects = applies_effects
        self.tick = tick
        self.queues: dict = {a: [] for a in self.agents}
        self.in_flight: list = []
        self.delivered: list = []
        self.log: list = []
        self._deliver_due()

    # ------------------------------------------------------------ capabilities

    def sensing(self, agent: str, items: Iterable, t: int) -> list:
        """With no items, hand over what the environment pushed to ``agent``.
        Otherwise resolve each fluent per the world script (omitting the ones
        it leaves open) and each ``did(C, A)`` against delivered messages."""
        items = list(items)
        if not items:
            out, keep = [], []
            for due, obs in self.queues.get(agent, []):
                (out if due <= t else keep).append((due, obs))
            self.queues[agent] = keep
            return [o for _d, o in out]
        out = []
        for it in items:
            if isinstance(it, Fn) and it.name == "did" and len(it.args) == 2:
                for m in self.delivered:
                    if m.receiver != agent or m.due > t:
                        continue
                    who = it.args[0]
                    if not isinstance(who, Var) and render(who) != m.sender:
                        continue
                    if match(it.args[1], m.action) is not None:
                        obs = ActionObs(m.sender, m.action, m.sent)
                        if obs not in out:
                            out.append(obs)
                continue
            f = positive_part(it)
            v = self.world.value(f, t)
            if v is not None:
                obs = FluentObs(f, v)
                if obs not in out:
                    out.append(obs)
        return out

    def actuating(self, agent: str, actions: Sequence, t: int, effects: Callable | None = None) -> list:
        """Admitted subset of ``actions``; admitted tells are put in transit."""
        admitted = [a for a in actions if self.world.admits(a, t)]
        for a in admitted:
            if isinstance(a, Fn) and a.name == "tell" and len(a.args) >= 2:
                receiver = render(a.args[1])
                if receiver in self.queues and receiver != agent:
                    m = Message(agent, receiver, a, t, t + self.delay)
                    self.in_flight.append(m)
                    self.log.append(m)
            if self.applies_effects and effects is not None:
                for lit in effects(a, t):
                    self.world.assertions.append((positive_part(lit), t + 1, not is_neg(lit)))
        if self.applies_effects:
            self.world.validate()
        return admitted

    def advance_clock(self) -> int:
        self.tick += 1
        self._deliver_due()
        return self.tick

    def pending(self, agent: str, t: int | None = None) -> bool:
        t = self.tick if t is None else t
        return any(due <= t for due, _o in self.queues.get(agent, []))

    def idle(self) -> bool:
        """Nothing in transit and nothing scheduled for later."""
        return not self.in_flight and not any(tk > self.tick for tk, _a, _o in self.world.exogenous)

    # ---------------------------------------------------------------- internals

    def _deliver_due(self) -> None:
        now = self.tick
        batch = []
        for tk, agent, obs in self.world.exogenous:
            if tk == now and agent in self.queues:
                sender = obs.agent if isinstance(obs, ActionObs) else ""
                batch.append((sender, 0, obs, agent))
        due = [m for m in self.in_flight if m.due <= now]
        self.in_flight = [m for m in self.in_flight if m.due > now]
        for m in due:
            self.delivered.append(m)
            batch.append((m.sender, 1, ActionObs(m.sender, m.action, m.sent), m.receiver))
        batch.sort(key=lambda b: (b[0], b[1], sort_key(b[2].action if isinstance(b[2], ActionObs) else b[2].fluent)))
        for _s, _k, obs, agent in batch:
            self.queues[agent].append((now, obs))
