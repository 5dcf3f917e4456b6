import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from momentum_lmm.methods import MethodSpec, linear_multistep_form
from momentum_lmm.stability import (
    RootFindingError,
    characteristic_polynomial,
    closed_form_locus,
    find_roots,
    is_stable,
    locus,
    stability_raster,
)

EULER = linear_multistep_form(MethodSpec.ab(1))
AB2 = linear_multistep_form(MethodSpec.ab(2))


def _at(curve, theta):
    k = int(np.argmin(np.abs(curve.thetas - theta)))
    assert abs(curve.thetas[k] - theta) < 1e-12
    return curve.values[k]


def test_euler_locus_points():
    curve = locus(EULER, 5)  # -pi, -pi/2, 0, pi/2, pi
    assert abs(_at(curve, math.pi) - (-2)) < 1e-15
    assert abs(_at(curve, math.pi / 2) - (-1 + 1j)) < 1e-15
    assert abs(_at(curve, 0.0)) < 1e-15


def test_ab2_locus_at_pi():
    assert abs(_at(locus(AB2, 3), math.pi) - (-1)) < 1e-15


def test_locus_invariant_against_direct_ratio():
    form = linear_multistep_form(MethodSpec.ghvb(2.7))
    curve = locus(form, 257)
    for th, v in zip(curve.thetas, curve.values):
        u = cmath.exp(-1j * th)
        a = sum(c * u**k for k, c in enumerate(form.a_poly.coefficients))
        b = sum(c * u**k for k, c in enumerate(form.b_poly.coefficients))
        assert abs(v - a / b) <= 1e-12 * max(1.0, abs(v))


def test_locus_rejects_too_few_samples():
    with pytest.raises(ValueError):
        locus(EULER, 1)


def test_closed_form_examples():
    assert closed_form_locus("hb", 1, 0.5, math.pi) == pytest.approx(-6.0, abs=1e-14)
    assert closed_form_locus("ghvb", 2, 1.0, math.pi) == pytest.approx(-1.0, abs=1e-14)
    assert closed_form_locus("ab", 3, 1.0, math.pi) == pytest.approx(-6 / 11, abs=1e-15)


@pytest.mark.parametrize("args", [("ab", 5, 1.0), ("ghvb", 5, 0.5), ("nesterov", 1, 0.5)])
def test_closed_form_unsupported(args):
    with pytest.raises(ValueError):
        closed_form_locus(*args, 0.3)


def test_find_roots_examples():
    assert sorted(r.real for r in find_roots([-1, 0, 1]).roots) == pytest.approx([-1, 1], abs=1e-14)
    roots = find_roots([0.5, 1.5, 1]).roots
    assert sorted(r.real for r in roots) == pytest.approx([-1.0, -0.5], abs=1e-12)
    # AB2 characteristic polynomial at z = -0.5
    z = -0.5
    rs = find_roots([0.5 * z, -(1 + 1.5 * z), 1]).roots
    assert sorted(r.real for r in rs) == pytest.approx([-0.3903882032022076, 0.6403882032022076], abs=1e-12)
    assert all(abs(r) < 1 for r in rs)


def test_find_roots_is_deterministic():
    p = [0.3 - 1j, 2.0, -1.5 + 0.5j, 0.0, 1.0]
    assert find_roots(p) == find_roots(p)


def test_find_roots_zero_roots_and_degree():
    rs = find_roots([0, 0, -1, 1]).roots
    assert sorted(abs(r) for r in rs) == pytest.approx([0, 0, 1])
    with pytest.raises(ValueError):
        find_roots([0, 0])
    with pytest.raises(ValueError):
        find_roots([3.0])


def test_root_finding_error_carries_residuals():
    err = RootFindingError("x", (1j,), (0.5,))
    assert err.residuals == (0.5,)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=6, unique=True))
def test_find_roots_recovers_factors(pairs):
    truth = [complex(a, b) for a, b in pairs]
    if any(abs(p - q) < 1e-2 for i, p in enumerate(truth) for q in truth[i + 1:]):
        return  # near-multiple roots are ill-conditioned beyond 1e-9
    coeffs = np.array([1.0 + 0j])
    for r in truth:
        coeffs = np.convolve(coeffs, [1.0, -r])  # descending
    got = find_roots(coeffs[::-1]).roots
    for r in truth:
        assert min(abs(r - g) for g in got) < 1e-9


def test_residual_bound():
    p = [2.0, -3.0 + 1j, 0.5, 4.0, -1.0]
    rs = find_roots(p)
    assert max(rs.residuals) <= 1e-10 * max(1.0, max(abs(c) for c in p))


def test_characteristic_polynomial_ab2():
    z = -0.5
    c = characteristic_polynomial(AB2, z)
    np.testing.assert_allclose(c, [0.5 * z, -(1 + 1.5 * z), 1])


def test_stability_verdicts():
    assert is_stable(EULER, -1).stable
    assert not is_stable(AB2, -27 / 26).stable
    assert is_stable(EULER, -27 / 26).stable


def test_origin_is_boundary_but_stable():
    v = is_stable(AB2, 0.0)
    assert v.stable and v.boundary and v.max_root_modulus == pytest.approx(1.0)


def test_double_unit_root_unstable():
    # A = (1 - E)^2, B = E: double root at r = 1 when z = 0
    from momentum_lmm.core import MethodForm, ShiftPolynomial
    form = MethodForm("double", 1.0, ShiftPolynomial([1, -2, 1]), ShiftPolynomial([0, 1]))
    assert not is_stable(form, 0.0).stable


def test_euler_raster_matches_disk():
    re = np.linspace(-2.5, 0.5, 61)
    im = np.linspace(-1.5, 1.5, 61)
    grid = stability_raster(EULER, (-2.5, 0.5), (-1.5, 1.5), 61)
    assert grid.shape == (61, 61)
    expected = np.abs(1 + re[None, :] + 1j * im[:, None]) <= 1 + 1e-9
    np.testing.assert_array_equal(grid, expected)


def test_raster_is_deterministic(monkeypatch):
    monkeypatch.setenv("MOMENTUM_LMM_THREADS", "1")
    g1 = stability_raster(AB2, (-1.5, 0.5), (-1, 1), (21, 11))
    monkeypatch.setenv("MOMENTUM_LMM_THREADS", "4")
    g2 = stability_raster(AB2, (-1.5, 0.5), (-1, 1), (21, 11))
    assert g1.shape == (11, 21)
    np.testing.assert_array_equal(g1, g2)


def test_raster_rejects_degenerate():
    with pytest.raises(ValueError):
        stability_raster(EULER, (0, 0), (-1, 1), 5)
    with pytest.raises(ValueError):
        stability_raster(EULER, (-1, 0), (-1, 1), 1)


def test_ab2_real_segment():
    step = (0.1 - (-1.2)) / 130
    for x in np.linspace(-1.2, 0.1, 131):
        stable = is_stable(AB2, x).stable
        if abs(x - (-1.0)) > step and abs(x) > step:
            assert stable == (-1.0 <= x <= 0.0), x


def test_hb_euler_real_segment_reaches_minus_six():
    form = linear_multistep_form(MethodSpec.hb(1, 0.5))
    assert is_stable(form, -5.99).stable
    assert not is_stable(form, -6.01).stable
    assert is_stable(form, -6.0).stable  # boundary, simple unit root


@pytest.mark.parametrize("family", ["ab", "hb", "ghvb"])
@pytest.mark.parametrize("order", [1, 2, 3, 4])
@pytest.mark.parametrize("beta", [0.2, 0.4, 0.6, 0.8, 1.0])
def test_locus_cross_validation(family, order, beta):
    spec = MethodSpec(family, order=order, beta=1.0 if family == "ab" else beta)
    curve = locus(linear_multistep_form(spec), 1024)
    ref = np.array([closed_form_locus(family, order, beta, th) for th in curve.thetas])
    assert curve.valid.all()
    assert np.max(np.abs(curve.values - ref)) <= 1e-10


@pytest.mark.parametrize("beta", [0.2, 0.4, 0.6, 0.8, 1.0])
def test_hb_euler_real_extent(beta):
    form = linear_multistep_form(MethodSpec.hb(1, beta))
    val = _at(locus(form, 3), math.pi)
    assert abs(val - (-2 * (2 - beta) / beta)) <= 1e-9
