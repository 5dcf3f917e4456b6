"""DDIM is Euler in disguise, and momentum samplers drop in for it.

A linear noise model stands in for a trained network. Sampling the
probability-flow ODE in the (x_bar, sigma_bar) coordinates with Euler
reproduces DDIM; the higher-order and momentum methods reuse the same field.
"""
import numpy as np

from momentum_lmm import MethodSpec
from momentum_lmm import diffusion as dm

rng = np.random.default_rng(0)
schedule = dm.AlphaSchedule(np.linspace(0.02, 0.98, 16))
noise = dm.linear_noise(np.array([[0.4, 0.1], [-0.1, 0.3]]))
x_T = rng.normal(size=2)

ddim = dm.ddim_sample(x_T, schedule, noise)
print("DDIM          ", ddim)
for spec in (MethodSpec.ab(1), MethodSpec.ab(2), MethodSpec.ab(4), MethodSpec.hb(4, 0.8), MethodSpec.ghvb(3.8)):
    _, x0 = dm.sample_ode(spec, schedule, noise, x_T)
    print(f"{spec.label:<14}", x0)

guided = dm.guide(noise, dm.GuidanceSpec(3.0, "classifier_free", lambda x, s: np.zeros_like(x)))
_, x0 = dm.sample_ode(MethodSpec.ghvb(1.5), schedule, guided, x_T)
print("GHVB 1.5, s=3 ", x0)
