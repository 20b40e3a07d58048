"""Risk against horizon for the first-hit and E2D learners.

Prints mean risk per horizon and the fitted log-log slope. First-hit on the
layered needle family decays close to 1/T; E2D on a small bandit family
decays roughly like 1/sqrt(T).

    python3 demos/risk_rates.py
"""

import math

from madec import constructions as C
from madec.harness import scaling_sweep
from madec.learners import LearnerConfig, first_hit_exact_risk


def show(title, rows, slope):
    print(title)
    for T, mean, se in rows:
        print(f"  T={T:5d}  risk={mean:.5f} +- {se:.5f}")
    print(f"  log-log slope {slope:+.2f}\n")


lay = C.layered_needle_instance(C.LayeredParams(6))
rows, slope = scaling_sweep("first-hit", lay, [16, 32, 64, 128], reps=2000, seed=0)
show("first-hit, layered needle L=6", rows, slope)
for T, *_ in rows:
    print(f"  closed form T={T:4d}: {first_hit_exact_risk(lay, 0, T):.5f}  bound 8 log T / T: {8 * math.log(T) / T:.5f}")
print()

fam = C.bandit_gap_family(8, 2)
rows, slope = scaling_sweep("e2d", fam, [25, 100, 400], reps=30, seed=1, true_model="random",
                            config=lambda T: LearnerConfig(gamma=math.sqrt(T)))
show("E2D, bandit gap family (8 arms), gamma = sqrt(T)", rows, slope)
