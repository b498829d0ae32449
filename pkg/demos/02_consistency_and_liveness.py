"""Repetition vectors, tick, hyperperiod and the liveness check, including
the deadlock that appears when c6 loses its fractional initial token.

Run: python3 demos/02_consistency_and_liveness.py
"""

from fractions import Fraction

from rmdf.analysis import (check_liveness, compute_hyperperiod, compute_tick,
                           repetition_vector, topology_matrix)
from rmdf.specio import load_model

g = load_model("ingenuity")

for mode in g.mode_table.names:
    rv = repetition_vector(g, mode)
    starved = [a for a, r in rv.items() if r == 0]
    print(f"mode {mode!r}: Camera {rv['Camera']}, Navigation Filter "
          f"{rv['Navigation Filter']}, starved {starved}")

tm = topology_matrix(g, "search")
print("topology row c6:", {a: str(v) for a, v in tm.rows["c6"].items()})

print("tick:", compute_tick(g), "ms")
hp = compute_hyperperiod(g)
print("hyperperiod:", hp.length, "ms; jobs:",
      {a: r for a, r in hp.jobs.items() if a in ("Camera", "IMU", "Altimeter", "Control Yaw 1")})

report = check_liveness(g)
print("as specified:", report, "| levels restored:", report.restored)

# Feature Match produces one token per frame and Navigation Filter eats
# 3/50 per job. Without the 1/50 head start, job 17 needs 51/50.
starved = g.with_channel("c6", init=Fraction(0))
print("c6 without initial tokens:", check_liveness(starved).deadlock)
