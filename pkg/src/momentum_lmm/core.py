"""Value types shared across the package.

States are plain 1-D ``float64`` numpy arrays and complex scalars are Python
``complex``; only the shift-operator polynomial, the method form and the
trajectory get their own classes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Coefficients below this magnitude are dropped from the top of a polynomial.
TRIM_TOL = 1e-15
CONSISTENCY_TOL = 1e-12


def as_state(x) -> np.ndarray:
    """Coerce ``x`` to a fresh 1-D float64 state vector."""
    arr = np.array(x, dtype=np.float64, ndmin=1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"state must be a non-empty 1-D vector, got shape {arr.shape}")
    return arr


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    while len(c) > 1 and abs(c[-1]) < TRIM_TOL:
        c.pop()
    if len(c) == 1 and abs(c[0]) < TRIM_TOL:
        c = [0.0]
    return tuple(c)


@dataclass(frozen=True)
class ShiftPolynomial:
    """Real polynomial ``c0 + c1*E + ... + cs*E**s`` in the backward shift E.

    ``E`` maps ``x_k`` to ``x_{k-1}``. Coefficients are stored lowest degree
    first, with negligible top coefficients stripped.
    """

    coefficients: tuple[float, ...]

    def __init__(self, coefficients: Sequence[float]):
        if len(coefficients) == 0:
            raise ValueError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", _trim(coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.coefficients == (0.0,)

    def __call__(self, u: complex) -> complex:
        return eval_shift_poly(self, u)

    def __len__(self) -> int:
        return len(self.coefficients)

    def __getitem__(self, k: int) -> float:
        return self.coefficients[k]

    def __add__(self, other: ShiftPolynomial) -> ShiftPolynomial:
        n = max(len(self), len(other))
        a = list(self.coefficients) + [0.0] * (n - len(self))
        b = list(other.coefficients) + [0.0] * (n - len(other))
        return ShiftPolynomial([x + y for x, y in zip(a, b)])

    def __mul__(self, other) -> ShiftPolynomial:
        if isinstance(other, ShiftPolynomial):
            return ShiftPolynomial(np.convolve(self.coefficients, other.coefficients))
        return ShiftPolynomial([c * float(other) for c in self.coefficients])

    __rmul__ = __mul__

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=np.float64)


def eval_shift_poly(p: ShiftPolynomial | Sequence[float], u: complex) -> complex:
    """Horner evaluation of ``sum_k c_k u**k`` in complex arithmetic."""
    coeffs = p.coefficients if isinstance(p, ShiftPolynomial) else p
    u = complex(u)
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


@dataclass(frozen=True)
class MethodForm:
    """Linear multistep form ``A(E) x_n = delta * B(E) f(x_n)``."""

    name: str
    beta: float
    a_poly: ShiftPolynomial
    b_poly: ShiftPolynomial

    @property
    def steps(self) -> int:
        """Number of past levels the recurrence reaches back (``s``)."""
        return max(self.a_poly.degree, self.b_poly.degree)

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """A and B coefficients zero-padded to a common length ``s + 1``."""
        s = self.steps
        a = np.zeros(s + 1)
        b = np.zeros(s + 1)
        a[: len(self.a_poly)] = self.a_poly.coefficients
        b[: len(self.b_poly)] = self.b_poly.coefficients
        return a, b

    def is_explicit(self) -> bool:
        return self.b_poly[0] == 0.0


def check_consistency(form: MethodForm) -> bool:
    """True iff ``|A(1)| <= 1e-12``."""
    return abs(eval_shift_poly(form.a_poly, 1.0)) <= CONSISTENCY_TOL


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    diverged: bool = False
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=np.float64))
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)
