"""Two agents and a third party: a query is refused, then answered.

Runs the shipped train-arrival scenario and prints the service's side of
the conversation together with its final narrative.
"""

from kgp import build, load_scenario, run, scenario_path
from kgp.terms import render

sc = load_scenario(scenario_path("setting1"))
agents, env, cfg = build(sc)
trace = run(agents, env, cfg["max_steps"])

for r in trace.records:
    if r.agent == "svs" and r.kind in ("POI", "RE", "AE"):
        print(f"{r.t:>3}  {r.kind}")

last = [r for r in trace.records if r.agent == "svs"][-1]
print("\nfinal narrative of svs:")
for fact in trace.states[last.post].kb0:
    print("  ", render(fact))
