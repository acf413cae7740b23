import os

import pytest
from hypothesis import HealthCheck, settings

from kgp.kb import AgentKB, Config
from kgp.lp import IC
from kgp.syntax import GoalRule, Located, Priority, Reactive, parse_clauses

settings.register_profile(
    "kgp",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("kgp")


def kb_of(text, name="a", fluents=None, actions=None, **cfg):
    """AgentKB from clause text, sorted into its parts."""
    rules, ics, rcs, goals, prios, aux = [], [], [], [], [], []
    for c in parse_clauses(text):
        if isinstance(c, Reactive):
            rcs.append(c)
        elif isinstance(c, GoalRule):
            goals.append(c)
        elif isinstance(c, Priority):
            prios.append(c)
        elif isinstance(c, Located) and isinstance(c.item, IC):
            ics.append(c.item)
        else:
            rules.append(c.item)
    return AgentKB(
        name,
        fluents=dict(fluents or {}),
        actions=dict(actions or {}),
        rules=tuple(rules),
        ics=tuple(ics),
        reactive=tuple(rcs),
        goal_rules=tuple(goals),
        gd_priorities=tuple(prios),
        config=Config(**cfg),
    )


SVS = """
observed(C, tell(C, svs, query_ref(Q), D)[T0], T), holds_at(have_info(Q, I), T) => assume_happens(tell(svs, C, inform(Q, I), D), T2) : T2 > T.
observed(C, tell(C, svs, query_ref(Q), D)[T0], T), holds_at(no_info(Q), T) => assume_happens(tell(svs, C, refuse(Q), D), T2) : T2 > T.
assume_happens(tell(svs, C, inform(Q, I), D), T), assume_happens(tell(svs, C, refuse(Q), D), T) => false.
assume_happens(A, T), not executable(A) => false.
executable(tell(svs, C, S, D)) <- C != svs.
initially(no_info(arrival(tr01))).
precondition(tell(svs, C, inform(Q, I), D), have_info(Q, I)).
initiates(tell(C, svs, inform(Q, I), D), T, have_info(Q, I)).
terminates(tell(C, svs, inform(Q, I), D), T, no_info(Q)).
"""

PSA = """
initiates(buy_ticket_online(From, To), T, have_ticket(From, To)).
precondition(buy_ticket_online(From, To), available_connection).
precondition(buy_ticket_online(From, To), available_destination(To)).
initiates(apply_visa(usa), T, have_visa(usa)).
precondition(apply_visa(usa), have_address(usa)).
initiates(book_hotel(L), T, have_address(usa)) <- holds_at(in(L, usa), T).
initially(in(denver, usa)).
"""

PSA_FLUENTS = {
    ("have_ticket", 2): "mental",
    ("have_visa", 1): "mental",
    ("have_address", 1): "mental",
    ("in", 2): "mental",
    ("available_connection", 0): "sensing",
    ("available_destination", 1): "sensing",
}
PSA_ACTIONS = {("buy_ticket_online", 2): "physical", ("apply_visa", 1): "physical", ("book_hotel", 1): "physical"}


@pytest.fixture(autouse=True)
def _no_horizon_env(monkeypatch):
    monkeypatch.delenv("KGP_HORIZON", raising=False)
    yield


def pytest_report_header(config):
    return f"KGP_HORIZON={os.environ.get('KGP_HORIZON', 'unset')}"


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
