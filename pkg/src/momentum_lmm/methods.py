"""Explicit multistep solvers with Heavy Ball style momentum.

Every solver here is a :class:`Stepper`: it owns the evaluation/velocity
history and advances a caller-supplied state by one step of size ``delta``.
Fields are callables ``field(x, t) -> dx/dt`` on 1-D float arrays.

Families
--------
AB          Adams-Bashforth (PLMS), orders 1-5.
HB          AB combination smoothed by a single exponential moving average.
GHVB        generalized heavy ball: the moving average is taken before the
            high-order combination, which keeps the order of AB.
NESTEROV    Nesterov momentum wrapped around AB.
AGGREGATED  several velocities with their own damping, mixed by weights.
INTERP_AB   direct blend of AB(r-1) and AB(r); only first order.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import MethodForm, ShiftPolynomial, Trajectory, as_state

VectorField = Callable[[np.ndarray, float], np.ndarray]

MAX_ORDER = 5
DIVERGENCE_NORM = 1e12

# Adams-Bashforth weights on f_n, f_{n-1}, ...
_AB_TABLE = {
    1: ((1,), 1),
    2: ((3, -1), 2),
    3: ((23, -16, 5), 12),
    4: ((55, -59, 37, -9), 24),
    5: ((1901, -2774, 2616, -1274, 251), 720),
}

# GHVB rows: weight j on v_{n+1-j} is (p_j + q_j*beta) / (den*beta).
_GHVB_TABLE = {
    1: (((0, 1),), 1),
    2: (((2, 1), (-2, 1)), 2),
    3: (((18, 5), (-24, 8), (6, -1)), 12),
    4: (((46, 9), (-78, 19), (42, -5), (-10, 1)), 24),
    5: (((1650, 251), (-3420, 646), (2880, -264), (-1380, 106), (270, -19)), 720),
}


def ab_coefficients(order: int) -> tuple[float, ...]:
    """Classical AB weights on ``f_n, f_{n-1}, ...`` for ``order`` 1-5."""
    if order not in _AB_TABLE:
        raise ValueError(f"AB order must be in 1..{MAX_ORDER}, got {order}")
    nums, den = _AB_TABLE[order]
    return tuple(n / den for n in nums)


def ab_coefficients_exact(order: int) -> tuple[Fraction, ...]:
    nums, den = _AB_TABLE[order]
    return tuple(Fraction(n, den) for n in nums)


def ghvb_coefficients(order: int, beta: float) -> tuple[float, ...]:
    """GHVB weights on ``v_{n+1}, v_n, ...``."""
    if order not in _GHVB_TABLE:
        raise ValueError(f"GHVB order must be in 1..{MAX_ORDER}, got {order}")
    rows, den = _GHVB_TABLE[order]
    return tuple((p + q * beta) / (den * beta) for p, q in rows)


class Family(str, Enum):
    AB = "ab"
    HB = "hb"
    GHVB = "ghvb"
    NESTEROV = "nesterov"
    AGGREGATED = "aggregated"
    INTERP_AB = "interp"


@dataclass(frozen=True)
class MethodSpec:
    """Identifies a solver: family, order, damping and family extras.

    For GHVB pass ``momentum_number`` and the order and damping are derived
    from it (``order = ceil(m)``, ``beta = m - order + 1``).
    """

    family: Family
    order: int = 1
    beta: float = 1.0
    momentum_number: float | None = None
    agg_betas: tuple[float, ...] | None = None
    agg_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.GHVB and self.momentum_number is not None:
            m = float(self.momentum_number)
            if not 0.0 < m <= MAX_ORDER:
                raise ValueError(f"momentum number must be in (0, {MAX_ORDER}], got {m}")
            order = max(1, math.ceil(m - 1e-12))
            object.__setattr__(self, "order", order)
            object.__setattr__(self, "beta", m - (order - 1))
        if isinstance(self.order, bool) or int(self.order) != self.order:
            raise ValueError(f"order must be an integer, got {self.order!r}")
        object.__setattr__(self, "order", int(self.order))
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {self.order}")
        beta = float(self.beta)
        if not (0.0 < beta <= 1.0):
            raise ValueError(f"beta must be in (0, 1], got {beta}")
        object.__setattr__(self, "beta", beta)
        if fam is Family.AGGREGATED:
            if self.agg_betas is None or self.agg_weights is None:
                raise ValueError("aggregated momentum needs agg_betas and agg_weights")
            betas = tuple(float(b) for b in self.agg_betas)
            weights = tuple(float(w) for w in self.agg_weights)
            if len(betas) == 0 or len(betas) != len(weights):
                raise ValueError("agg_betas and agg_weights must be non-empty and of equal length")
            if any(not (0.0 < b <= 1.0) for b in betas):
                raise ValueError(f"every aggregated beta must be in (0, 1], got {betas}")
            if abs(math.fsum(weights) - 1.0) > 1e-12:
                raise ValueError(f"aggregated weights must sum to 1, got {math.fsum(weights)}")
            object.__setattr__(self, "agg_betas", betas)
            object.__setattr__(self, "agg_weights", weights)

    # convenience constructors mirroring the usual naming ("HB 0.8", "GHVB 1.8")
    @classmethod
    def ab(cls, order: int) -> MethodSpec:
        return cls(Family.AB, order=order)

    @classmethod
    def hb(cls, order: int, beta: float) -> MethodSpec:
        return cls(Family.HB, order=order, beta=beta)

    @classmethod
    def ghvb(cls, momentum_number: float) -> MethodSpec:
        return cls(Family.GHVB, momentum_number=momentum_number)

    @classmethod
    def nesterov(cls, order: int, beta: float) -> MethodSpec:
        return cls(Family.NESTEROV, order=order, beta=beta)

    @classmethod
    def interp(cls, order: int, beta: float) -> MethodSpec:
        return cls(Family.INTERP_AB, order=order, beta=beta)

    @classmethod
    def aggregated(cls, betas: Sequence[float], weights: Sequence[float], order: int = 1) -> MethodSpec:
        return cls(Family.AGGREGATED, order=order, agg_betas=tuple(betas), agg_weights=tuple(weights))

    @property
    def label(self) -> str:
        fam = self.family
        if fam is Family.AB:
            return f"AB{self.order}"
        if fam is Family.GHVB:
            return f"GHVB {self.order - 1 + self.beta:g}"
        if fam is Family.AGGREGATED:
            return f"AGG{self.order} {list(self.agg_betas)}/{list(self.agg_weights)}"
        return f"{fam.name}{self.order} {self.beta:g}"


_SELECTOR = re.compile(r"^(euler|ab|hb|ghvb|nesterov|interp)([0-9.]*)(?::([0-9.eE+-]+))?$")


def parse_method(text: str) -> MethodSpec:
    """Parse a compact selector such as ``ab2``, ``hb2:0.8``, ``ghvb1.8``.

    ``euler`` is AB1, ``nesterov1:0.5`` is Nesterov on Euler and
    ``interp2:0.5`` blends AB1 and AB2.
    """
    m = _SELECTOR.match(text.strip().lower())
    if m is None:
        raise ValueError(f"cannot parse method selector {text!r}")
    name, num, beta = m.groups()
    if name == "euler":
        return MethodSpec.ab(1)
    if name == "ghvb":
        if not num or beta is not None:
            raise ValueError(f"GHVB selector needs a momentum number, e.g. ghvb1.8 (got {text!r})")
        return MethodSpec.ghvb(float(num))
    if not num or not num.isdigit():
        raise ValueError(f"{name} selector needs an integer order (got {text!r})")
    order = int(num)
    if name == "ab":
        if beta is not None:
            raise ValueError("AB takes no damping")
        return MethodSpec.ab(order)
    if beta is None:
        raise ValueError(f"{name} selector needs a damping, e.g. {name}{order}:0.8")
    return MethodSpec(Family(name), order=order, beta=float(beta))


class Stepper:
    """Base class: history bookkeeping shared by every family."""

    def __init__(self, spec: MethodSpec):
        self.spec = spec
        self.reset()

    def reset(self):
        self.step_index = 0
        self.history: deque[np.ndarray] = deque(maxlen=self.spec.order)
        self.velocity: np.ndarray | None = None
        self.diverged = False

    @property
    def order(self) -> int:
        return self.spec.order

    @property
    def beta(self) -> float:
        return self.spec.beta

    def effective_order(self) -> int:
        """Order used on the next step (``min(order, step_index + 1)``)."""
        return min(self.order, self.step_index + 1)

    def step(self, field: VectorField, x, t: float, delta: float) -> np.ndarray:
        if not (math.isfinite(delta) and delta != 0.0):
            raise ValueError(f"step size must be finite and non-zero, got {delta}")
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.asarray(field(x, t), dtype=np.float64)
            if e.shape != x.shape:
                raise ValueError(f"field returned shape {e.shape} for a state of shape {x.shape}")
            if not np.all(np.isfinite(e)):
                self.diverged = True
            x_new = self._advance(x, e, float(delta))
        if not np.all(np.isfinite(x_new)):
            self.diverged = True
        self.step_index += 1
        return x_new

    def _advance(self, x: np.ndarray, e: np.ndarray, delta: float) -> np.ndarray:
        raise NotImplementedError

    def _combined(self, e: np.ndarray) -> np.ndarray:
        """Push ``e`` into the evaluation buffer and return the AB combination."""
        self.history.appendleft(e)
        return _weighted(ab_coefficients(self.effective_order()), self.history)


def _weighted(weights, vectors) -> np.ndarray:
    acc = weights[0] * vectors[0]
    for w, v in zip(weights[1:], list(vectors)[1:]):
        acc = acc + w * v
    return acc


class ABStepper(Stepper):
    def _advance(self, x, e, delta):
        return x + delta * self._combined(e)


class InterpStepper(Stepper):
    """``(1 - beta) * AB(r-1) + beta * AB(r)``; order 1 is plain Euler."""

    def _advance(self, x, e, delta):
        self.history.appendleft(e)
        c = self.effective_order()
        lo = max(1, min(self.order - 1, c))
        w_lo = ab_coefficients(lo)
        w_hi = ab_coefficients(c)
        n = max(len(w_lo), len(w_hi))
        w = [
            (1.0 - self.beta) * (w_lo[j] if j < len(w_lo) else 0.0)
            + self.beta * (w_hi[j] if j < len(w_hi) else 0.0)
            for j in range(n)
        ]
        return x + delta * _weighted(w, self.history)


class HBStepper(Stepper):
    def _advance(self, x, e, delta):
        e_hat = self._combined(e)
        if self.velocity is None:
            self.velocity = e_hat.copy()
        self.velocity = (1.0 - self.beta) * self.velocity + self.beta * e_hat
        return x + delta * self.velocity


class GHVBStepper(Stepper):
    """History holds velocities ``v_{n+1}, v_n, ...`` (newest first)."""

    def _advance(self, x, e, delta):
        if self.velocity is None:
            self.velocity = e.copy()
        self.velocity = (1.0 - self.beta) * self.velocity + self.beta * e
        self.history.appendleft(self.velocity)
        w = ghvb_coefficients(self.effective_order(), self.beta)
        return x + delta * _weighted(w, self.history)


class NesterovStepper(Stepper):
    """``y_{n+1} = x_n + delta*beta*e``, ``x_{n+1} = y_{n+1} + (1-beta)(y_{n+1} - y_n)``.

    ``velocity`` holds ``y_n``. It is seeded as ``x_0 - delta*(1-beta)*e_0`` so
    the first step is an Euler step.
    """

    def _advance(self, x, e, delta):
        e_hat = self._combined(e)
        if self.velocity is None:
            self.velocity = x - delta * (1.0 - self.beta) * e_hat
        y_new = x + delta * self.beta * e_hat
        x_new = y_new + (1.0 - self.beta) * (y_new - self.velocity)
        self.velocity = y_new
        return x_new


class AggregatedStepper(Stepper):
    def reset(self):
        super().reset()
        self.agg_velocities: list[np.ndarray] | None = None

    def _advance(self, x, e, delta):
        e_hat = self._combined(e)
        if self.agg_velocities is None:
            self.agg_velocities = [e_hat.copy() for _ in self.spec.agg_betas]
        self.agg_velocities = [
            (1.0 - b) * v + b * e_hat for b, v in zip(self.spec.agg_betas, self.agg_velocities)
        ]
        return x + delta * _weighted(self.spec.agg_weights, self.agg_velocities)


_STEPPERS = {
    Family.AB: ABStepper,
    Family.HB: HBStepper,
    Family.GHVB: GHVBStepper,
    Family.NESTEROV: NesterovStepper,
    Family.AGGREGATED: AggregatedStepper,
    Family.INTERP_AB: InterpStepper,
}


def make_method(spec: MethodSpec) -> Stepper:
    """Return a fresh stepper (empty history) for ``spec``."""
    return _STEPPERS[spec.family](spec)


def make_aggregated(agg_betas: Sequence[float], agg_weights: Sequence[float], base_order: int = 1) -> Stepper:
    return make_method(MethodSpec.aggregated(agg_betas, agg_weights, base_order))


def linear_multistep_form(spec: MethodSpec) -> MethodForm:
    """The ``(A, B)`` pair the stepper obeys once its warm-up is over.

    Momentum families share ``A = (1 - E)(1 - (1 - beta) E)``; it comes from
    applying ``1 - (1 - beta) E`` to the velocity recursion.
    """
    fam, r, beta = spec.family, spec.order, spec.beta
    E = ShiftPolynomial([0.0, 1.0])
    diff = ShiftPolynomial([1.0, -1.0])
    ab = ShiftPolynomial(ab_coefficients(r))
    damp = ShiftPolynomial([1.0, -(1.0 - beta)])
    if fam is Family.AB:
        return MethodForm(spec.label, 1.0, diff, E * ab)
    if fam is Family.INTERP_AB:
        lo = ShiftPolynomial(ab_coefficients(max(1, r - 1)))
        return MethodForm(spec.label, beta, diff, E * ((1.0 - beta) * lo + beta * ab))
    if fam is Family.HB:
        return MethodForm(spec.label, beta, diff * damp, beta * (E * ab))
    if fam is Family.GHVB:
        g = ShiftPolynomial(ghvb_coefficients(r, beta))
        return MethodForm(spec.label, beta, diff * damp, beta * (E * g))
    if fam is Family.NESTEROV:
        outer = ShiftPolynomial([2.0 - beta, -(1.0 - beta)])
        return MethodForm(spec.label, beta, diff * damp, beta * (E * outer * ab))
    raise ValueError(f"no linear multistep form for the {fam.name} family")


def _march(stepper: Stepper, field: VectorField, x0, times: np.ndarray, deltas: Sequence[float], label: str):
    x = as_state(x0)
    states = np.empty((len(times), x.size))
    states[0] = x
    diverged = not np.all(np.isfinite(x))
    with np.errstate(over="ignore", invalid="ignore"):
        for n, d in enumerate(deltas):
            x = stepper.step(field, x, times[n], d)
            states[n + 1] = x
            if not diverged and (stepper.diverged or not np.linalg.norm(x) <= DIVERGENCE_NORM):
                diverged = True
    return Trajectory(times, states, diverged=diverged or stepper.diverged, label=label)


def integrate(spec: MethodSpec | Stepper, problem, n_steps: int) -> Trajectory:
    """Fixed-step integration of ``problem`` over its interval.

    The trajectory is flagged diverged once any state norm exceeds 1e12 or
    turns non-finite; stepping still runs to the end.
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")
    n_steps = int(n_steps)
    if not problem.t1 != problem.t0:
        raise ValueError("problem interval is degenerate")
    stepper = spec if isinstance(spec, Stepper) else make_method(spec)
    delta = (problem.t1 - problem.t0) / n_steps
    times = problem.t0 + delta * np.arange(n_steps + 1)
    times[-1] = problem.t1
    return _march(stepper, problem.field, problem.x0, times, [delta] * n_steps, stepper.spec.label)


def solve_on_grid(spec: MethodSpec | Stepper, field: VectorField, x0, grid: Sequence[float]) -> Trajectory:
    """Step through an arbitrary (possibly decreasing, non-uniform) time grid.

    Step ``n`` uses ``delta = grid[n+1] - grid[n]``. Multistep weights are not
    rescaled for non-uniform spacing.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid needs at least two points")
    stepper = spec if isinstance(spec, Stepper) else make_method(spec)
    return _march(stepper, field, x0, grid, np.diff(grid), stepper.spec.label)


def run_recurrence(form: MethodForm, field: VectorField, start_states, times: Sequence[float]) -> np.ndarray:
    """Evaluate ``A(E) x_n = delta B(E) f(x_n)`` directly on a uniform grid.

    ``start_states`` supplies the first ``s`` states (``s = form.steps``); the
    rest are produced by the recurrence. Returns all states, one per time.
    """
    if not form.is_explicit():
        raise ValueError("run_recurrence only handles explicit forms")
    times = np.asarray(times, dtype=np.float64)
    delta = times[1] - times[0]
    a, b = form.padded()
    s = form.steps
    start = np.atleast_2d(np.asarray(start_states, dtype=np.float64))
    if len(start) < s:
        raise ValueError(f"need {s} starting states, got {len(start)}")
    xs = [row.copy() for row in start[:s]]
    fs = [np.asarray(field(xs[k], times[k]), dtype=np.float64) for k in range(s)]
    for n in range(s, len(times)):
        acc = np.zeros_like(xs[0])
        for m in range(1, s + 1):
            acc = acc - a[m] * xs[n - m] + delta * b[m] * fs[n - m]
        xs.append(acc / a[0])
        fs.append(np.asarray(field(xs[n], times[n]), dtype=np.float64))
    return np.array(xs)
