"""Linear test problems with closed-form or independently computed solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import as_state

TOY_MATRIX = np.array([[0.0, 1.0], [-9.0, -10.0]])
TOY_X0 = np.array([-1.0, 0.0])


@dataclass(frozen=True)
class Problem:
    dimension: int
    field: Callable[[np.ndarray, float], np.ndarray]
    x0: np.ndarray
    t0: float
    t1: float
    exact: Callable[[float], np.ndarray] | None = None
    label: str = ""


def _realify(lam: complex) -> np.ndarray:
    return np.array([[lam.real, -lam.imag], [lam.imag, lam.real]])


def test_equation(lam, x0=1.0, t0: float = 0.0, t1: float = 1.0) -> Problem:
    """``x' = lam * x``.

    A complex ``lam`` becomes the 2-D real system acting on ``(Re x, Im x)``;
    ``x0`` may then be a complex number or a pair.
    """
    lam = complex(lam)
    if lam.imag == 0.0 and not isinstance(x0, complex) and np.size(x0) == 1:
        rate = lam.real
        x0v = as_state(x0)
        return Problem(
            1,
            lambda x, t: rate * x,
            x0v,
            float(t0),
            float(t1),
            exact=lambda t: x0v * math.exp(rate * (t - t0)),
            label=f"test-eq({rate:g})",
        )
    if isinstance(x0, complex) or np.size(x0) == 1:
        c0 = complex(np.asarray(x0).item())
    else:
        pair = as_state(x0)
        if pair.size != 2:
            raise ValueError("a complex test equation needs a complex x0 or a pair")
        c0 = complex(pair[0], pair[1])
    M = _realify(lam)

    def exact(t):
        c = c0 * np.exp(lam * (t - t0))
        return np.array([c.real, c.imag])

    return Problem(2, lambda x, t: M @ x, np.array([c0.real, c0.imag]), float(t0), float(t1),
                   exact=exact, label=f"test-eq({lam})")


test_equation.__test__ = False  # not a pytest test


def complex_test_field(z) -> Callable[[np.ndarray, float], np.ndarray]:
    """Many decoupled realified test equations stacked in one state.

    The state is ``(Re x_0, Im x_0, Re x_1, Im x_1, ...)`` and component k
    obeys ``x_k' = z_k x_k``.
    """
    z = np.asarray(z, dtype=np.complex128).ravel()

    def field(x, t):
        c = (x[0::2] + 1j * x[1::2]) * z
        out = np.empty_like(x)
        out[0::2] = c.real
        out[1::2] = c.imag
        return out

    return field


def toy_2x2() -> Problem:
    """The stiff 2x2 system with eigenvalues -9 and -1, on [0, 3]."""

    def exact(t):
        return (np.array([1.0, -9.0]) * math.exp(-9.0 * t) / 8.0
                + np.array([-1.0, 1.0]) * 9.0 * math.exp(-t) / 8.0)

    return Problem(2, lambda x, t: TOY_MATRIX @ x, TOY_X0.copy(), 0.0, 3.0, exact=exact, label="toy2x2")


def expm_taylor(A, tol: float = 1e-12, max_terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling and squaring a truncated Taylor series.

    ``A`` is scaled by ``2**-s`` until its 1-norm is at most 0.5; the series
    is summed until a term falls below ``tol`` relative to the running sum,
    then squared back ``s`` times.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    norm = np.abs(A).sum(axis=0).max() if n else 0.0
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    B = A / 2.0**s
    total = np.eye(n)
    term = np.eye(n)
    for k in range(1, max_terms + 1):
        term = term @ B / k
        total = total + term
        # |B| <= 0.5 bounds the tail by |term|; squaring amplifies it by ~2**s.
        if np.abs(term).max() <= tol * 1e-4 * 2.0**-s * np.abs(total).max():
            break
    for _ in range(s):
        total = total @ total
    return total


def linear_system(M, x0, t0: float = 0.0, t1: float = 1.0) -> Problem:
    """``x' = M x`` with the exact flow from :func:`expm_taylor`."""
    M = np.asarray(M, dtype=np.float64)
    x0v = as_state(x0)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if M.shape[0] != x0v.size:
        raise ValueError(f"M is {M.shape[0]}x{M.shape[0]} but x0 has {x0v.size} entries")
    M_ = M.copy()

    def exact(t):
        return expm_taylor(M_ * (t - t0)) @ x0v

    return Problem(x0v.size, lambda x, t: M_ @ x, x0v, float(t0), float(t1), exact=exact,
                   label=f"linear{M.shape[0]}")
