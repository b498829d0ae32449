"""Load the bundled helicopter model, look at its structure and validate it.

Run: python3 demos/01_model_and_validation.py
"""

from rmdf.graph import control_area, validate_graph
from rmdf.specio import load_model, parse_spec, serialize_spec

g = load_model("ingenuity")
print(f"{len(g.actors)} actors, {len(g.channels)} channels, modes {g.mode_table.names}")

timed = ", ".join(f"{a.id} @ {a.frequency} Hz" for a in g.timed_actors)
print(f"timed actors: {timed}")

c6 = g.channel("c6")
print(f"c6: {c6.producer} -> {c6.consumer}, prod {c6.prod}, cons {c6.cons}, init {c6.init}")

# The mode decider conditions three actors through its controlled
# splitter/joiner pair.
print("Label Decider controls:", sorted(control_area(g, "Label Decider")))

print("validation:", validate_graph(g))

# Removing the control input of the controlled splitter breaks the model.
broken = g.subgraph([a for a in g.ids if a != "Duplicater 2"])
print("without Duplicater 2:")
print(validate_graph(broken))

# The text format round-trips exactly.
assert parse_spec(serialize_spec(g)) == g
print("serialize -> parse round trip: identical")
