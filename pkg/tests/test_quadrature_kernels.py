import math

import mpmath
import numpy as np
import pytest

from gafun.errors import QuadratureError
from gafun.kernels import (CallableDensity, KernelPoleError, MollifierSpec, PiecewiseLinearDensity,
                           kernel, kernel_margin, mollifier_value)
from gafun.quadrature import integrate, peak_points


def test_integrate_polynomial_exact():
    r = integrate(lambda x: x ** 3 - x + 1, -1.0, 2.0)
    assert r.value == pytest.approx(3.75 - 1.5 + 3.0, abs=1e-13)


def test_integrate_infinite_range():
    r = integrate(lambda x: 1 / (1 + x ** 2), -np.inf, np.inf)
    assert r.value.real == pytest.approx(math.pi, abs=1e-10)


def test_integrate_narrow_peak_with_points():
    w = 1e-6
    f = lambda x: w / (math.pi * (x * x + w * w))
    pts = peak_points([0.0], [w], -1.0, 1.0)
    r = integrate(f, -1.0, 1.0, pts, abs_tol=1e-12)
    exact = 2 * math.atan(1 / w) / math.pi
    assert r.value.real == pytest.approx(exact, abs=1e-10)


def test_integrate_budget_exhaustion():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 1e-9, 1.0, max_evals=500,
                  abs_tol=1e-14, rel_tol=1e-14)


def test_mollifier_spec_normalization():
    assert MollifierSpec().normalization == pytest.approx(1 / math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        MollifierSpec(s=0)


def test_mollifier_pole():
    with pytest.raises(KernelPoleError):
        mollifier_value(1j, 1.0)


def test_kernel_orders_match_derivative():
    lam, z, zeta, h = 0.3, 0.1 + 0.02j, 0.2 + 0.05j, 1e-5
    k1 = kernel(lam, z, zeta, 1)
    fd = (kernel(lam, z + h, zeta, 0) - kernel(lam, z - h, zeta, 0)) / (2 * h)
    assert k1 == pytest.approx(fd, rel=1e-7)


def test_kernel_margin_bounds_denominator():
    z = np.array([0.0 + 0.01j, 3.0])
    zeta = np.array([0.1 + 0.0j, 0.2 + 0.1j])
    m = kernel_margin(z, zeta, -1.0, 1.0)
    lam = np.linspace(-1, 1, 2001)
    for zi, ci, mi in zip(z, zeta, m):
        w = (lam - zi) / ci
        assert np.min(np.minimum(abs(w - 1j), abs(w + 1j))) >= mi * (1 - 1e-9)


def test_triangle_mass_and_norms():
    t = PiecewiseLinearDensity.triangle(0.0, 1.0)
    assert t.integral() == pytest.approx(1.0, abs=1e-15)
    assert t.l1_norm() == pytest.approx(1.0, abs=1e-15)
    assert t.sup_abs() == pytest.approx(1.0)
    assert t.is_compact()


def _mp_conv(d, z, zeta, order):
    """Reference: mpmath quadrature of the kernel against the density."""
    mpmath.mp.dps = 30
    z, zeta = mpmath.mpc(z), mpmath.mpc(zeta)
    ap, am = z + 1j * zeta, z - 1j * zeta
    p = order + 1
    c = mpmath.factorial(order) / (2j * mpmath.pi)

    def k(lam):
        return c * ((lam - ap) ** (-p) - (lam - am) ** (-p)) * d.value(float(lam))

    lo, hi = d.support()
    nodes = sorted(set([lo, hi] + list(d.features()) + [float(z.real)]))
    nodes = [x for x in nodes if lo <= x <= hi]
    return complex(mpmath.quad(k, nodes))


@pytest.mark.parametrize("order", [0, 1, 2])
def test_exact_convolution_matches_reference(order):
    t = PiecewiseLinearDensity.from_table([-1.0, -0.2, 0.5, 1.0], [0.0, 1.3, -0.4, 0.0])
    z, zeta = 0.3 + 0.01j, 0.15 + 0.02j
    got = complex(t.convolve(np.array([z]), np.array([zeta]), order)[0])
    ref = _mp_conv(t, z, zeta, order)
    assert got == pytest.approx(ref, rel=1e-10)


def test_heaviside_convolution_closed_form():
    h = PiecewiseLinearDensity.constant(1.0, 0.0, math.inf)
    z, xi = np.array([0.4 + 0j]), np.array([0.1 + 0j])
    got = h.convolve(z, xi)[0]
    assert got.real == pytest.approx(0.5 + math.atan(0.4 / 0.1) / math.pi, abs=1e-14)


def test_whole_line_constant_convolution():
    c = PiecewiseLinearDensity.constant(2.0)
    got = c.convolve(np.array([0.3 + 0.01j]), np.array([0.2 + 0.01j]))[0]
    assert got == pytest.approx(2.0, abs=1e-14)


def test_callable_density_agrees_with_piecewise():
    t = PiecewiseLinearDensity.triangle(0.0, 1.0)
    c = CallableDensity(lambda x: np.maximum(1 - np.abs(x), 0.0), -1.0, 1.0, breakpoints=[0.0])
    z, zeta = np.array([0.2 + 0.0j]), np.array([0.3 + 0.0j])
    assert c.convolve(z, zeta)[0] == pytest.approx(t.convolve(z, zeta)[0], rel=1e-9)
    with pytest.raises(ValueError):
        CallableDensity(lambda x: x, 0.0, math.inf)
