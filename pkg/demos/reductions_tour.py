"""Multi-agent to hidden-reward reduction and the separation example.

Builds a random two-player coarse-correlated-equilibrium class, reduces it to
a hidden-reward instance over a fixed decision grid and checks that the
constrained DEC agrees. Then shows the class where the multi-agent offset DEC
vanishes while the induced single-agent class still has bandit-size DEC.

    python3 demos/reductions_tour.py
"""

from madec import constructions as C
from madec.dec import ReferenceModel, constrained_dec
from madec.harness import hr_grid, random_cce_with_grid, suite_separation

J, grid, _ = random_cce_with_grid(seed=3)
H = C.ma_to_hr(J, grid)
print(f"multi-agent class: {J.n_models} models, grid of {len(grid)} decisions")
print(f"hidden-reward image: {H.n_models} models, {len(hr_grid(H))} decisions\n")

ref_J = ReferenceModel.uniform(J)  # model sets coincide, so one reference serves both
for eps in (0.1, 0.2, 0.5):
    a = constrained_dec(J, eps, grid, ref_J).value
    b = constrained_dec(H, eps, hr_grid(H), ref_J).value
    print(f"  eps={eps:.1f}  multi-agent {a:.6f}  hidden-reward {b:.6f}  diff {abs(a - b):.1e}")
print()

rep = suite_separation()
print(f"separation: induced single-agent offset DEC {rep.info['induced']:.5f}, "
      f"embedded bandit DEC {rep.info['embedded']:.5f}")
for c in rep.claims:
    print(f"  {'ok  ' if c.passed else 'FAIL'} {c.id}: {c.lhs:.3g} vs {c.rhs:.3g}")
