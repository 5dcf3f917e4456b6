"""Why AB2 misbehaves on a stiff 2x2 system and momentum repairs it.

The system x' = [[0, 1], [-9, -10]] x has eigenvalues -9 and -1. With 26
steps on [0, 3] the fast mode lands at delta * lambda = -27/26, just past
the left end of AB2's real stability interval [-1, 0].
"""
import dataclasses

import numpy as np

from momentum_lmm import MethodSpec, global_error, integrate, is_stable, linear_multistep_form, toy_2x2

prob = toy_2x2()
z = -9 * 3 / 26
print(f"fast mode sits at z = {z:.4f}")

methods = [MethodSpec.ab(1), MethodSpec.ab(2), MethodSpec.hb(2, 0.8), MethodSpec.hb(2, 0.9),
           MethodSpec.ghvb(1.8), MethodSpec.ghvb(1.9)]
print(f"{'method':<10} {'stable at z':<12} {'error at t=3':>12}")
for spec in methods:
    verdict = is_stable(linear_multistep_form(spec), z)
    err = global_error(integrate(spec, prob, 26), prob.exact)
    print(f"{spec.label:<10} {str(verdict.stable):<12} {err:12.5f}")

# An unstable root only bites with time: 26 steps grow the fast mode ~3.7x,
# keep stepping at the same delta and AB2 blows up.
root = max(abs(r) for r in np.roots([1, -(1 + 1.5 * z), 0.5 * z]))
print(f"\nAB2 dominant root modulus {root:.4f}, growth over 26 steps {root ** 26:.2f}")
long = integrate(MethodSpec.ab(2), dataclasses.replace(prob, t1=120.0), 1040)
print(f"AB2 after 1040 steps: diverged={long.diverged}")
