"""Planning a trip with sensing: the ticket plan senses its unreliable
preconditions before buying. Prints the readable trace."""

from kgp import build, emit, load_scenario, run, scenario_path

sc = load_scenario(scenario_path("setting2"))
agents, env, cfg = build(sc)
trace = run(agents, env, 9)
print(emit(trace, "text"), end="")

# the forest is empty once both goals are settled
print("nodes left:", len(trace.states[trace.records[-1].post].nodes))
