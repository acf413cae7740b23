"""Computational logic agents: knowledge, goals, plans and a cycle theory
that decides which transition runs next."""

from .abduction import check_answer, plan, react
from .control import Agent, normal_cycle_theory, run
from .environment import Environment, WorldScript
from .preferences import goal_decision
from .scenario import build, load_scenario, parse_scenario, print_scenario, scenario_path
from .state import AgentState, Node, initial_state
from .temporal import holds, holds_ground
from .trace import emit, verify

__version__ = "0.1.0"
