"""Agent knowledge bases and configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .clp import Engine
from .constraints import DEFAULT_HORIZON
from .lp import IC, Program, Rule, infer_time_positions
from .terms import Fn, positive_part

ACTION_KINDS = ("physical", "communication", "sensing")
FLUENT_KINDS = ("mental", "sensing")


@dataclass(frozen=True)
class Config:
    horizon: int = DEFAULT_HORIZON
    epsilon: int = 2
    gi_mode: str = "replace"  # or "merge"
    incompat: str = "weak"  # or "strong"
    delta_bound: int = 6
    unknown_action_time: bool = False

    def replace(self, **kw) -> "Config":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(eq=False)
class AgentKB:
    """Static part of an agent: its theories, signature and settings.

    ``rules`` are the domain rules shared by the temporal, precondition
    and planning knowledge (initiates/terminates/precondition/initially
    and auxiliary definitions). ``ics`` are integrity constraints,
    ``reactive`` reactive constraints, ``goal_rules``/``gd_priorities``/
    ``gd_rules`` form the goal decision theory and ``cycle`` is an
    optional cycle theory overriding the normal one.
    """

    name: str
    fluents: dict = field(default_factory=dict)  # (name, arity) -> kind
    actions: dict = field(default_factory=dict)  # (name, arity) -> kind
    rules: tuple = ()
    ics: tuple = ()
    reactive: tuple = ()
    goal_rules: tuple = ()
    gd_priorities: tuple = ()
    gd_rules: tuple = ()
    cycle: object = None
    config: Config = field(default_factory=Config)
    unreliable_pre: tuple = ()
    unreliable_effect: tuple = ()

    def __post_init__(self):
        self._engines: dict = {}
        self._program = None
        self._tpos = None

    # -------------------------------------------------------------- sorts

    def is_action(self, t) -> bool:
        if not isinstance(t, Fn):
            return False
        if t.name == "sense" and len(t.args) == 1:
            return True
        return (t.name, len(t.args)) in self.actions

    def action_kind(self, t) -> str | None:
        if not isinstance(t, Fn):
            return None
        if t.name == "sense" and len(t.args) == 1:
            return "sensing"
        return self.actions.get((t.name, len(t.args)))

    def fluent_kind(self, lit) -> str:
        f = positive_part(lit)
        if isinstance(f, Fn):
            return self.fluents.get((f.name, len(f.args)), "mental")
        return "mental"

    def is_sensing_fluent(self, lit) -> bool:
        return self.fluent_kind(lit) == "sensing"

    # ------------------------------------------------------------ engines

    def tr_program(self) -> Program:
        if self._program is None:
            from .temporal import ec_theory

            rules = ec_theory(self.config.unknown_action_time) + list(self.rules)
            self._program = Program(rules)
            self._tpos = infer_time_positions(rules)
        return self._program

    def tr_engine(self, kb0: Sequence[Fn], extra: Sequence[Fn] = ()) -> Engine:
        """Engine over the temporal theory plus the narrative ``kb0``.
        Engines are cached per narrative so answers are shared between
        calls made on the same state."""
        key = (tuple(kb0), tuple(extra))
        eng = self._engines.get(key)
        if eng is None:
            prog = self.tr_program()
            if len(self._engines) > 64:
                self._engines.clear()
            eng = Engine(prog, self.config.horizon, tuple(kb0) + tuple(extra), self._tpos)
            self._engines[key] = eng
        return eng

    def with_config(self, **kw) -> "AgentKB":
        from dataclasses import replace

        return replace(self, config=self.config.replace(**kw))
