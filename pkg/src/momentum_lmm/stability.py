"""Linear stability of multistep forms: boundary locus, roots, verdicts."""
from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MethodForm, eval_shift_poly

STABLE_TOL = 1e-9
UNIT_CIRCLE_TOL = 1e-7
SIMPLE_ROOT_SEP = 1e-6
ROOT_ITER_CAP = 500
SINGULAR_B = 1e-14


class RootFindingError(RuntimeError):
    def __init__(self, message, roots, residuals):
        super().__init__(message)
        self.roots = roots
        self.residuals = residuals


@dataclass(frozen=True)
class LocusCurve:
    thetas: np.ndarray
    values: np.ndarray  # complex; NaN where the sample is singular
    valid: np.ndarray


@dataclass(frozen=True)
class RootSet:
    roots: tuple[complex, ...]
    residuals: tuple[float, ...]

    def __len__(self):
        return len(self.roots)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    max_root_modulus: float
    boundary: bool


def locus(form: MethodForm, n_samples: int = 1024) -> LocusCurve:
    """Sample ``s(theta) = A(e^{-i theta}) / B(e^{-i theta})`` on [-pi, pi]."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if form.b_poly.is_zero():
        raise ValueError("B is identically zero")
    thetas = np.linspace(-np.pi, np.pi, n_samples)
    values = np.empty(n_samples, dtype=np.complex128)
    valid = np.ones(n_samples, dtype=bool)
    for i, th in enumerate(thetas):
        u = cmath.exp(-1j * th)
        b = eval_shift_poly(form.b_poly, u)
        if abs(b) < SINGULAR_B:
            values[i] = complex("nan+nanj")
            valid[i] = False
        else:
            values[i] = eval_shift_poly(form.a_poly, u) / b
    return LocusCurve(thetas, values, valid)


def _ab_den(order: int, u: complex) -> tuple[float, complex]:
    if order == 1:
        return 1.0, u
    if order == 2:
        return 2.0, 3 * u - u**2
    if order == 3:
        return 12.0, 23 * u - 16 * u**2 + 5 * u**3
    if order == 4:
        return 24.0, 55 * u - 59 * u**2 + 37 * u**3 - 9 * u**4
    raise ValueError(f"no closed-form locus for AB order {order}")


def closed_form_locus(family, order: int, beta: float, theta: float) -> complex:
    """Printed closed-form boundary locus for AB, HB-on-AB and GHVB, orders 1-4.

    Deliberately written out formula by formula instead of going through
    :class:`MethodForm`, so it can cross-check :func:`locus`.
    """
    fam = str(getattr(family, "value", family)).lower()
    u = cmath.exp(-1j * theta)
    if fam == "ab":
        scale, den = _ab_den(order, u)
        return scale * (1 - u) / den
    damped = (1 - u) * (1 - (1 - beta) * u)
    if fam == "hb":
        scale, den = _ab_den(order, u)
        return scale * damped / (beta * den)
    if fam == "ghvb":
        if order == 1:
            return damped / (beta * u)
        if order == 2:
            return 2 * damped / ((2 + beta) * u - (2 - beta) * u**2)
        if order == 3:
            return 12 * damped / (
                (18 + 5 * beta) * u - (24 - 8 * beta) * u**2 + (6 - beta) * u**3)
        if order == 4:
            return 24 * damped / (
                (46 + 9 * beta) * u - (78 - 19 * beta) * u**2
                + (42 - 5 * beta) * u**3 - (10 - beta) * u**4)
        raise ValueError(f"no closed-form locus for GHVB order {order}")
    raise ValueError(f"no closed-form locus for family {family!r}")


def _horner2(c: Sequence[complex], x: complex) -> tuple[complex, complex]:
    """Value and derivative of the ascending-order polynomial ``c`` at ``x``."""
    p = 0j
    dp = 0j
    for ck in reversed(c):
        dp = dp * x + p
        p = p * x + ck
    return p, dp


def find_roots(p: Sequence[complex]) -> RootSet:
    """All complex roots of ``p[0] + p[1] r + ... + p[n] r**n``.

    Aberth-Ehrlich simultaneous iteration from equally spaced starting points
    on a circle sized by the Fujiwara bound; roots at zero are deflated
    exactly first. Deterministic.
    """
    c = [complex(v) for v in p]
    scale = max((abs(v) for v in c), default=0.0)
    if scale == 0.0:
        raise ValueError("cannot find roots of the zero polynomial")
    while len(c) > 1 and abs(c[-1]) <= 1e-15 * scale:
        c.pop()
    n_zero = 0
    while len(c) > 1 and c[0] == 0:
        c.pop(0)
        n_zero += 1
    deg = len(c) - 1
    if deg + n_zero < 1:
        raise ValueError("polynomial has degree 0 after normalization")
    lead = c[-1]
    monic = [v / lead for v in c]

    roots: list[complex] = []
    if deg == 1:
        roots = [-monic[0]]
    elif deg > 1:
        radius = 2.0 * max(abs(monic[deg - k]) ** (1.0 / k) for k in range(1, deg + 1))
        radius = max(radius, 1e-3)
        z = [radius * cmath.exp(1j * (2 * math.pi * k / deg + 0.4)) for k in range(deg)]
        for _ in range(ROOT_ITER_CAP):
            biggest = 0.0
            for i in range(deg):
                val, der = _horner2(monic, z[i])
                if val == 0:
                    continue
                ratio = val / der if der != 0 else complex(1e-3)
                rep = sum(1.0 / (z[i] - z[j]) for j in range(deg) if j != i and z[i] != z[j])
                w = ratio / (1.0 - ratio * rep)
                z[i] -= w
                biggest = max(biggest, abs(w) / max(1.0, abs(z[i])))
            if biggest < 1e-15:
                break
        roots = z

    bound = 1e-10 * max(1.0, scale)
    residuals = [abs(eval_shift_poly(c, r)) for r in roots]
    if any(not (res <= bound) for res in residuals):
        raise RootFindingError(
            f"root iteration did not converge (worst residual {max(residuals):.3e})",
            tuple(roots), tuple(residuals))
    roots = [0j] * n_zero + roots
    residuals = [0.0] * n_zero + residuals
    order = sorted(range(len(roots)), key=lambda k: (roots[k].real, roots[k].imag))
    return RootSet(tuple(roots[k] for k in order), tuple(residuals[k] for k in order))


def characteristic_polynomial(form: MethodForm, z: complex) -> list[complex]:
    """Ascending coefficients in r of ``r**s * (A(1/r) - z B(1/r))``."""
    a, b = form.padded()
    s = form.steps
    return [complex(a[s - j]) - z * complex(b[s - j]) for j in range(s + 1)]


def is_stable(form: MethodForm, z: complex) -> StabilityVerdict:
    """Root-condition verdict for ``delta * lambda = z``.

    Stable iff every characteristic root has modulus at most ``1 + 1e-9``
    and roots lying on the unit circle are simple.
    """
    z = complex(z)
    coeffs = characteristic_polynomial(form, z)
    top = max(abs(v) for v in coeffs)
    if top < 1e-15:
        raise ValueError(f"characteristic polynomial is degenerate at z={z}")
    if abs(coeffs[-1]) <= 1e-15 * top:
        # a root escaped to infinity
        return StabilityVerdict(False, math.inf, False)
    roots = find_roots(coeffs).roots
    mods = [abs(r) for r in roots]
    rmax = max(mods)
    on_circle = [i for i, m in enumerate(mods) if abs(m - 1.0) <= UNIT_CIRCLE_TOL]
    simple = all(
        abs(roots[i] - roots[j]) > SIMPLE_ROOT_SEP
        for i in on_circle
        for j in range(len(roots))
        if j != i
    )
    stable = rmax <= 1.0 + STABLE_TOL and simple
    return StabilityVerdict(stable, rmax, abs(rmax - 1.0) <= STABLE_TOL)


def _workers() -> int:
    env = os.environ.get("MOMENTUM_LMM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def raster_axes(re_range, im_range, resolution) -> tuple[np.ndarray, np.ndarray]:
    n_re, n_im = (resolution, resolution) if np.isscalar(resolution) else resolution
    if n_re < 2 or n_im < 2:
        raise ValueError("resolution must be at least 2")
    if not (re_range[1] > re_range[0] and im_range[1] > im_range[0]):
        raise ValueError("raster ranges must be non-degenerate and increasing")
    return np.linspace(*re_range, int(n_re)), np.linspace(*im_range, int(n_im))


def stability_raster(form: MethodForm, re_range, im_range, resolution) -> np.ndarray:
    """Boolean grid ``[i, j] = is_stable(form, re[j] + 1j*im[i]).stable``.

    Rows run over the imaginary axis (ascending), columns over the real axis.
    ``resolution`` is an int or ``(n_re, n_im)``.
    """
    re, im = raster_axes(re_range, im_range, resolution)

    def row(y):
        return [is_stable(form, complex(x, y)).stable for x in re]

    workers = min(_workers(), len(im))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, im))
    else:
        rows = [row(y) for y in im]
    return np.array(rows, dtype=bool)
