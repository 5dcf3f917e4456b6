"""Probability-flow ODE view of deterministic diffusion sampling.

A noise model is any pure callable ``predict(x_t, sigma) -> eps`` where
``sigma = sqrt(1 - alpha) / sqrt(alpha)`` labels the noise level (it is in
one-to-one correspondence with ``alpha`` and hence with the discrete time).
With ``x_bar = x_t / sqrt(alpha)`` the sampler becomes ``dx_bar/dsigma = eps``,
so any stepper from :mod:`momentum_lmm.methods` can drive it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

NoiseFn = Callable[[np.ndarray, float], np.ndarray]


def _check_alpha(alpha: float, *, allow_one: bool = True) -> float:
    alpha = float(alpha)
    ok = 0.0 < alpha <= 1.0 if allow_one else 0.0 < alpha < 1.0
    if not ok:
        raise ValueError(f"alpha must be in (0, 1{']' if allow_one else ')'}, got {alpha}")
    return alpha


def sigma_bar(alpha: float) -> float:
    alpha = _check_alpha(alpha)
    return math.sqrt(1.0 - alpha) / math.sqrt(alpha)


def alpha_from_sigma_bar(sigma: float) -> float:
    return 1.0 / (1.0 + sigma * sigma)


def x_bar(x, alpha: float) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) / math.sqrt(_check_alpha(alpha))


def x_from_bar(xb, alpha: float) -> np.ndarray:
    return np.asarray(xb, dtype=np.float64) * math.sqrt(_check_alpha(alpha))


def sigma_tilde(alpha: float) -> float:
    alpha = _check_alpha(alpha, allow_one=False)
    return math.sqrt(alpha) / math.sqrt(1.0 - alpha)


def alpha_from_sigma_tilde(st: float) -> float:
    return st * st / (1.0 + st * st)


def x_tilde(x, alpha: float) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) / math.sqrt(1.0 - _check_alpha(alpha, allow_one=False))


def x_from_tilde(xt, alpha: float) -> np.ndarray:
    return np.asarray(xt, dtype=np.float64) * math.sqrt(1.0 - _check_alpha(alpha, allow_one=False))


@dataclass(frozen=True)
class AlphaSchedule:
    """Noise schedule in sampling order: ``alphas[0]`` is the noisiest level.

    Discrete time ``t`` runs from ``T = len(alphas) - 1`` down to 0, so
    ``alpha_t = alphas[T - t]``.
    """

    alphas: tuple[float, ...]

    def __init__(self, alphas: Sequence[float]):
        a = tuple(float(v) for v in alphas)
        if len(a) < 2:
            raise ValueError("a schedule needs at least two levels")
        for v in a:
            _check_alpha(v)
        if any(b <= c for c, b in zip(a, a[1:])):
            raise ValueError("alphas must increase strictly along sampling")
        object.__setattr__(self, "alphas", a)

    @property
    def T(self) -> int:
        return len(self.alphas) - 1

    def alpha(self, t: int) -> float:
        if not 0 <= t <= self.T:
            raise IndexError(f"time index {t} outside 0..{self.T}")
        return self.alphas[self.T - t]

    def sigma_bar_grid(self) -> np.ndarray:
        """``sigma_bar`` at each level in sampling order (decreasing)."""
        return np.array([sigma_bar(a) for a in self.alphas])

    def sigma_tilde_grid(self) -> np.ndarray:
        return np.array([sigma_tilde(a) for a in self.alphas])

    @classmethod
    def from_json(cls, path) -> AlphaSchedule:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError("schedule file must hold a JSON array of alphas")
        return cls(data)

    def to_json(self) -> str:
        return json.dumps(list(self.alphas))


@dataclass(frozen=True)
class NoiseModel:
    predict: NoiseFn

    def __call__(self, x, sigma):
        return self.predict(x, sigma)


def linear_noise(K, coords: str = "x") -> NoiseModel:
    """Analytic noise model, linear in the state.

    ``coords="x"`` gives ``eps = K x_t``; ``coords="bar"`` gives
    ``eps = K x_bar``, which makes the BAR field exactly ``K x_bar``.
    """
    K = np.atleast_2d(np.asarray(K, dtype=np.float64))
    if coords == "x":
        return NoiseModel(lambda x, s: K @ x)
    if coords == "bar":
        return NoiseModel(lambda x, s: K @ (x * math.sqrt(1.0 + s * s)))
    raise ValueError(f"unknown coords {coords!r}")


class GuidanceMode(str, Enum):
    CLASSIFIER = "classifier"
    CLASSIFIER_FREE = "classifier_free"


@dataclass(frozen=True)
class GuidanceSpec:
    """``auxiliary`` is the log-density gradient (classifier mode) or the
    unconditional noise prediction (classifier-free mode)."""

    scale: float
    mode: GuidanceMode
    auxiliary: NoiseFn

    def __post_init__(self):
        object.__setattr__(self, "mode", GuidanceMode(self.mode))
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ValueError(f"guidance scale must be finite and >= 0, got {self.scale}")


def guide(noise: NoiseModel | NoiseFn, spec: GuidanceSpec) -> NoiseModel:
    """Compose a guided noise model.

    Classifier: ``eps - s * grad``. Classifier-free: ``eps_u + s (eps_c - eps_u)``
    where ``noise`` is the conditional model.
    """
    s = float(spec.scale)
    aux = spec.auxiliary
    if spec.mode is GuidanceMode.CLASSIFIER:
        return NoiseModel(lambda x, sig: noise(x, sig) - s * np.asarray(aux(x, sig)))

    def cfg(x, sig):
        u = np.asarray(aux(x, sig))
        return u + s * (noise(x, sig) - u)

    return NoiseModel(cfg)


def ddim_step(x_t, t: int, schedule: AlphaSchedule, noise: NoiseModel | NoiseFn) -> np.ndarray:
    """One deterministic DDIM update from time ``t`` to ``t - 1``."""
    if not 1 <= t <= schedule.T:
        raise IndexError(f"ddim_step needs 1 <= t <= {schedule.T}, got {t}")
    a_t = schedule.alpha(t)
    a_prev = schedule.alpha(t - 1)
    x_t = np.asarray(x_t, dtype=np.float64)
    eps = np.asarray(noise(x_t, sigma_bar(a_t)), dtype=np.float64)
    return (math.sqrt(a_prev / a_t) * (x_t - math.sqrt(1.0 - a_t) * eps)
            + math.sqrt(1.0 - a_prev) * eps)


def ddim_sample(x_T, schedule: AlphaSchedule, noise) -> np.ndarray:
    """Run the full DDIM chain from ``t = T`` down to 0."""
    x = np.asarray(x_T, dtype=np.float64)
    for t in range(schedule.T, 0, -1):
        x = ddim_step(x, t, schedule, noise)
    return x


class Coords(str, Enum):
    BAR = "bar"
    TILDE = "tilde"


def ode_field_from_noise(noise: NoiseModel | NoiseFn, coords: Coords | str = Coords.BAR):
    """Vector field of the sampling ODE in the chosen coordinates.

    BAR: ``dx_bar/dsigma_bar = eps(x_t, sigma_bar)``.
    TILDE: ``dx_tilde/dsigma_tilde = (x_t - sqrt(1-alpha) eps) / sqrt(alpha)``,
    the predicted clean sample. The time argument is the respective sigma.
    """
    coords = Coords(coords)
    if coords is Coords.BAR:
        def bar_field(xb, sigma):
            a = alpha_from_sigma_bar(sigma)
            return np.asarray(noise(xb * math.sqrt(a), sigma), dtype=np.float64)
        return bar_field

    def tilde_field(xt, st):
        a = alpha_from_sigma_tilde(st)
        x = xt * math.sqrt(1.0 - a)
        eps = np.asarray(noise(x, math.sqrt(1.0 - a) / math.sqrt(a)), dtype=np.float64)
        return (x - math.sqrt(1.0 - a) * eps) / math.sqrt(a)

    return tilde_field


def sample_ode(spec, schedule: AlphaSchedule, noise, x_T, coords: Coords | str = Coords.BAR):
    """Integrate the sampling ODE over the schedule's own sigma grid.

    Returns the trajectory (in the chosen coordinates, times are sigmas)
    and the final sample mapped back to ``x_0`` space.
    """
    from .methods import solve_on_grid

    coords = Coords(coords)
    if coords is Coords.BAR:
        grid = schedule.sigma_bar_grid()
        start = x_bar(x_T, schedule.alphas[0])
    else:
        grid = schedule.sigma_tilde_grid()
        start = x_tilde(x_T, schedule.alphas[0])
    traj = solve_on_grid(spec, ode_field_from_noise(noise, coords), start, grid)
    a0 = schedule.alphas[-1]
    final = x_from_bar(traj.final, a0) if coords is Coords.BAR else x_from_tilde(traj.final, a0)
    return traj, final


def lie_trotter_step(x, sigma: float, delta: float, stepper1, stepper2, field1, field2) -> np.ndarray:
    """Split step: ``field1`` with ``stepper1``, then ``field2`` with ``stepper2``.

    Both substeps span the same ``delta`` from ``sigma``; each stepper keeps
    its own history across calls.
    """
    y = stepper1.step(field1, x, sigma, delta)
    return stepper2.step(field2, y, sigma, delta)
