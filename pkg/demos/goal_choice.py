"""Goal decision for a robot with a low battery that has finished work.

Weak incompatibility keeps every goal that is not beaten; strong
incompatibility keeps only the more urgent one.
"""

from kgp.kb import AgentKB, Config
from kgp.preferences import BOTTOM, goal_decision
from kgp.state import initial_state
from kgp.syntax import GoalRule, Priority, parse_clauses

GOALS = """
n(return_home, Tau) :: return_home[Tau] : Tau < T2 <- holds_at(finished_work, T), holds_at(¬at_home, T), time_now(T), T2 = T + 6.
n(recharge_battery, Tau) :: recharge_battery[Tau] : Tau < T2 <- holds_at(low_battery, T), time_now(T), T2 = T + 2.
typeof(return_home, required).
typeof(recharge_battery, operational).
more_urgent_wrt_type(operational, required).
incompatible(return_home(T), recharge_battery(T)).
gd_pref(X, Y) :: n(X, _) > n(Y, _) <- typeof(X, XT), typeof(Y, YT), more_urgent_wrt_type(XT, YT).
"""
WORLD = "initially(finished_work).\ninitially(¬at_home).\ninitially(low_battery)."


def robot(mode):
    clauses = parse_clauses(GOALS)
    kb = AgentKB(
        "robot",
        rules=tuple(c.item for c in parse_clauses(WORLD)),
        goal_rules=tuple(c for c in clauses if isinstance(c, GoalRule)),
        gd_priorities=tuple(c for c in clauses if isinstance(c, Priority)),
        gd_rules=tuple(c.item for c in clauses if not isinstance(c, (GoalRule, Priority))),
        config=Config(incompat=mode, horizon=30),
    )
    return initial_state(kb)


for mode in ("weak", "strong"):
    res = goal_decision(robot(mode), 1)
    shown = "⊥" if res == BOTTOM else ", ".join(str(g) for g in res)
    print(f"{mode:>6}: {shown}")
