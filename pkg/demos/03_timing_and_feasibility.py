"""Per-job execution windows and the necessary WCET condition.

Run: python3 demos/03_timing_and_feasibility.py
"""

from fractions import Fraction

from rmdf.arith import decimal_str
from rmdf.specio import load_model
from rmdf.timing import check_feasibility, job_timing, max_wcets, timing_table

g = load_model("ingenuity")

print("first three Camera and Feature Tracking jobs:")
for r in timing_table(g, 3):
    if r.actor in ("Camera", "Feature Tracking"):
        print(f"  {r.actor} #{r.n}: [{r.release}, {r.deadline}] window {r.window}")

nf = job_timing(g, "Navigation Filter", 34)
print(f"Navigation Filter #34 released at {nf.release} ms "
      f"(~{decimal_str(nf.release)}), once Feature Match has finished frame 3")

limits = max_wcets(g)
tight = sorted(limits.items(), key=lambda kv: kv[1])[:5]
print("tightest WCET bounds:", ", ".join(f"{a} {v} (~{decimal_str(v)} ms)" for a, v in tight))

verdict = "pass" if check_feasibility(g).passed else "fail"
print("uniform 1/5 ms WCETs:", verdict)
slow = g.with_actor("Camera", wcet=Fraction(3, 5))
print("Camera at 0.6 ms:", check_feasibility(slow).failures)
