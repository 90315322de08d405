import math

import numpy as np
import pytest

from gafun.algebra import Representative, mul, sub
from gafun.diagnostics import (GeneralizedNumber, SupportWarning, TestFunction, associate,
                               gn_add, gn_inverse, gn_invertibility_probe, gn_mul, gn_norm,
                               laurent, null_test, pair, pair_value, pointvalue)
from gafun.embedding import embed_delta
from gafun.errors import DomainError, FitError, PreconditionError

GAUSS = TestFunction.gaussian(0.0, 1.0)


def rep(text):
    return Representative.from_text(text)


def test_laurent_of_inverse_power(fam):
    s = laurent(rep("1/zeta"), 5.0, n=2, family=fam)
    assert s.coeff(-1) == pytest.approx(1.0, abs=1e-12)
    js = np.arange(-s.J, s.J + 1)
    scaled = np.abs(s.coefficients) * s.radius ** js
    assert np.max(np.delete(scaled, s.J - 1)) < 1e-14


def test_laurent_of_zero(fam):
    s = laurent(rep("0"), 5.0, n=2, family=fam)
    assert np.max(np.abs(s.coefficients)) < 1e-14


def test_laurent_needs_point_in_O(fam):
    with pytest.raises(DomainError):
        laurent(rep("1/zeta"), 0.5, n=2, family=fam)


def test_laurent_series_reproduces_function(fam):
    d = embed_delta(0.0, 0, fam)
    s = laurent(d, 5.0)
    zeta = np.array([0.2, 0.22j, -0.28 + 0.05j])
    exact = zeta / (math.pi * (zeta ** 2 + 25))
    assert s(zeta) == pytest.approx(exact, rel=1e-12)


def test_null_test_zero_and_witness(fam):
    closed = rep("zeta/(pi*(zeta^2 + z^2))")
    d = embed_delta(0.0, 0, fam)
    assert null_test(sub(d, closed), [5.0, -7.0], n=2, family=fam).zero
    r = null_test(rep("0.001*zeta"), [5.0], n=2, family=fam)
    assert not r.zero and r.witness["j"] == 1
    assert r.witness["a_j"][0] == pytest.approx(1e-3, abs=1e-6)


def test_null_test_sector_stage_catches_flat_function(fam):
    r = null_test(rep("exp(-1/zeta^2)"), [5.0], n=2, family=fam)
    assert not r.zero


def test_pointvalue_examples(fam):
    d = embed_delta(0.0, 0, fam)
    a = pointvalue(d, 0.0)
    zeta = np.array([0.1, 0.05, 0.02 + 0.001j, 0.3, 0.2])
    assert a(zeta) == pytest.approx(1 / (math.pi * zeta), rel=1e-14)
    sq = pointvalue(mul(d, d), 0.0)
    assert sq(zeta) == pytest.approx(a(zeta) ** 2, rel=1e-14)
    c = pointvalue(Representative.constant(3.0), 1.0)
    assert c(zeta) == pytest.approx(np.full(5, 3.0))


def test_generalized_number_ring():
    a = GeneralizedNumber.from_expr("zeta + 2")
    b = GeneralizedNumber.from_expr("zeta^2")
    z = np.array([0.1, 0.2])
    assert gn_add(a, b)(z) == pytest.approx(z + 2 + z ** 2)
    assert gn_mul(a, gn_inverse(a))(z) == pytest.approx(np.ones(2))
    with pytest.raises(PreconditionError):
        GeneralizedNumber.from_expr("z + zeta")


def test_invertibility_probe():
    v = gn_invertibility_probe(GeneralizedNumber.from_expr("zeta"))
    assert v.invertible_so_far and v.m == 1
    a = GeneralizedNumber.from_expr("exp(-1/zeta^2)", 2)
    assert gn_norm(a, 2) > 0
    assert not gn_invertibility_probe(a).invertible_so_far


def test_pairing_constant_and_linearity():
    phi = TestFunction.bump(0.0, 1.0)
    one = pair(Representative.constant(1.0), phi)
    assert one(np.array([0.1]))[0] == pytest.approx(phi.integral(), rel=1e-12)
    f, g = rep("exp(z)*zeta"), rep("z^2")
    lhs = pair_value(Representative.from_text("2*exp(z)*zeta - 3*z^2"), phi, 0.1)
    assert lhs == pytest.approx(2 * pair_value(f, phi, 0.1) - 3 * pair_value(g, phi, 0.1), rel=1e-12)


def test_pairing_support_warning(fam):
    with pytest.warns(SupportWarning):
        pair(embed_delta(0.0, 0, fam), GAUSS)


def test_delta_pairing_is_one_minus_O_xi(fam):
    p = pair(embed_delta(0.0, 0, fam), GAUSS)
    xi = np.array([0.01, 0.005])
    v = p(xi.astype(complex))
    assert np.all(np.abs(v - 1) < 2 * xi)


def test_association_examples(fam):
    d = embed_delta(0.0, 0, fam)
    xi = 0.016 / 2.0 ** np.arange(12)
    r = associate(d, GAUSS, xi)
    assert not r.divergent and r.limit == pytest.approx(1.0, abs=1e-6)
    r = associate(mul(d, d), GAUSS, 5e-4 / 2.0 ** np.arange(12))
    assert r.divergent and r.order == pytest.approx(1.0, abs=0.02)


def test_association_grid_validation(fam):
    d = embed_delta(0.0, 0, fam)
    with pytest.raises(FitError):
        associate(d, GAUSS, np.geomspace(0.1, 0.01, 5))
    with pytest.raises(FitError):
        associate(d, GAUSS, np.linspace(0.1, 0.01, 12))


def test_test_function_catalog():
    with pytest.raises(PreconditionError):
        TestFunction("box")
    b = TestFunction.bump(1.0, 0.5)
    assert b.support() == (0.5, 1.5)
    assert b(np.array([0.4, 1.0, 1.6])).tolist() == pytest.approx([0.0, 1.0, 0.0])
