"""Empirical order of convergence on x' = -x over [0, 1].

Heavy ball damping trades accuracy for stability: whatever the base
method, the HB variant converges at first order. GHVB keeps its order.
"""
from momentum_lmm import MethodSpec, test_equation
from momentum_lmm.analysis import order_study

steps = [20, 40, 80, 160, 320, 640]
prob = test_equation(-1.0)
for spec in (MethodSpec.ab(1), MethodSpec.ab(2), MethodSpec.hb(2, 0.5), MethodSpec.ghvb(1.5),
             MethodSpec.ghvb(2.5)):
    study = order_study(spec, prob, steps)
    qs = " ".join(f"{q:5.2f}" for q in study.q)
    print(f"{spec.label:<10} formal {study.formal_order}   q: {qs}")

print("\nGHVB 2.5 is formally third order, but the Euler first step of the")
print("warm-up leaves an O(delta^2) error that dominates the global error.")
