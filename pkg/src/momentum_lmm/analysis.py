"""Order of convergence (formal and empirical), error norms, magnitude score."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import MethodForm, Trajectory, check_consistency

ORDER_TOL = 1e-10


@dataclass(frozen=True)
class OrderReport:
    formal_order: int
    first_violated_k: int
    defect: float
    conditions: tuple[float, ...] = ()


def order_conditions(form: MethodForm, max_k: int) -> list[float]:
    """Taylor moments ``C_0 .. C_max_k`` of the form.

    ``C_0 = sum a_m`` and, for ``k >= 1``,
    ``C_k = sum a_m m^k / k! + sum b_m m^(k-1) / (k-1)!`` (with ``0**0 = 1``).
    """
    a, b = form.padded()
    m = np.arange(len(a), dtype=np.float64)
    out = [float(math.fsum(a))]
    for k in range(1, max_k + 1):
        ak = math.fsum(a * m**k) / math.factorial(k)
        bk = math.fsum(b * m ** (k - 1)) / math.factorial(k - 1)  # numpy gives 0.0**0 == 1.0
        out.append(ak + bk)
    return out


def formal_order(form: MethodForm, max_k: int = 8) -> OrderReport:
    """Largest p <= max_k whose conditions ``C_0 .. C_p`` all vanish (|C| <= 1e-10)."""
    if not 1 <= max_k <= 12:
        raise ValueError(f"max_k must be in 1..12, got {max_k}")
    conds = order_conditions(form, max_k + 1)
    if not check_consistency(form):
        return OrderReport(0, 0, abs(conds[0]), tuple(conds))
    p = 0
    while p < max_k and abs(conds[p + 1]) <= ORDER_TOL:
        p += 1
    return OrderReport(p, p + 1, abs(conds[p + 1]), tuple(conds))


def empirical_order(errors: Sequence[float], deltas: Sequence[float]) -> list[float]:
    """``q_i = log(e_{i+1}/e_i) / log(delta_{i+1}/delta_i)`` per consecutive pair."""
    e = np.asarray(errors, dtype=np.float64)
    d = np.asarray(deltas, dtype=np.float64)
    if e.shape != d.shape or e.ndim != 1 or e.size < 2:
        raise ValueError("errors and deltas need equal length >= 2")
    if not np.all(e > 0) or not np.all(np.isfinite(e)):
        raise ValueError("errors must be finite and strictly positive")
    if not np.all(d > 0) or not np.all(np.diff(d) < 0):
        raise ValueError("deltas must be positive and strictly decreasing")
    return [float(v) for v in np.log(e[1:] / e[:-1]) / np.log(d[1:] / d[:-1])]


def global_error(traj: Trajectory, exact: Callable[[float], np.ndarray] | Trajectory) -> float:
    """L2 distance between final states; ``inf`` for a diverged trajectory."""
    if traj.diverged:
        return math.inf
    if isinstance(exact, Trajectory):
        if not math.isclose(exact.times[-1], traj.times[-1], rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("reference trajectory ends at a different time")
        ref = exact.final
    else:
        ref = np.asarray(exact(traj.times[-1]), dtype=np.float64)
    return float(np.linalg.norm(traj.final - ref))


def mean_global_error(trajs: Sequence[Trajectory], exacts: Sequence) -> float:
    """Mean of :func:`global_error` over a batch."""
    if len(trajs) != len(exacts) or not trajs:
        raise ValueError("need matching, non-empty batches")
    return float(np.mean([global_error(t, e) for t, e in zip(trajs, exacts)]))


@dataclass
class OrderStudy:
    steps: list[int]
    deltas: list[float]
    errors: list[float]
    q: list[float]
    formal_order: int | None = None
    label: str = ""
    extra: dict = field(default_factory=dict)


def order_study(spec, problem, steps: Sequence[int]) -> OrderStudy:
    """Integrate at each step count, measure the final error, estimate q."""
    from .methods import Family, integrate, linear_multistep_form

    steps = [int(n) for n in steps]
    if len(steps) < 2:
        raise ValueError("need at least two step counts")
    if problem.exact is None:
        raise ValueError("order study needs a problem with an exact solution")
    span = problem.t1 - problem.t0
    deltas = [abs(span) / n for n in steps]
    errors = [global_error(integrate(spec, problem, n), problem.exact) for n in steps]
    q = empirical_order(errors, deltas)
    p = None
    if spec.family is not Family.AGGREGATED:
        p = formal_order(linear_multistep_form(spec)).formal_order
    return OrderStudy(steps, deltas, errors, q, p, spec.label)


@dataclass(frozen=True)
class MagnitudeConfig:
    channel_means: tuple[float, ...]
    channel_stds: tuple[float, ...]
    tau: float = 3.0
    pool_k: int = 4

    def __post_init__(self):
        object.__setattr__(self, "channel_means", tuple(float(v) for v in self.channel_means))
        object.__setattr__(self, "channel_stds", tuple(float(v) for v in self.channel_stds))
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if int(self.pool_k) != self.pool_k or self.pool_k < 1:
            raise ValueError("pool_k must be a positive integer")
        if len(self.channel_means) != len(self.channel_stds):
            raise ValueError("channel means and stds differ in length")
        if any(not s > 0 for s in self.channel_stds):
            raise ValueError("channel stds must be positive")


def magnitude_map(grid, cfg: MagnitudeConfig) -> np.ndarray:
    """Max-pooled per-pixel Euclidean norm of the channel-normalized grid."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 3:
        raise ValueError(f"grid must be H x W x C, got shape {g.shape}")
    H, W, C = g.shape
    k = int(cfg.pool_k)
    if C != len(cfg.channel_means):
        raise ValueError(f"grid has {C} channels but stats have {len(cfg.channel_means)}")
    if H % k or W % k:
        raise ValueError(f"grid {H}x{W} is not divisible by pool kernel {k}")
    z = (g - np.asarray(cfg.channel_means)) / np.asarray(cfg.channel_stds)
    mag = np.sqrt(np.sum(z * z, axis=-1))
    return mag.reshape(H // k, k, W // k, k).max(axis=(1, 3))


def magnitude_score(grid, cfg: MagnitudeConfig) -> float:
    """Sum of pooled magnitudes that reach ``tau``; smaller ones count as zero."""
    pooled = magnitude_map(grid, cfg)
    return math.fsum(pooled[pooled >= cfg.tau].tolist())
