import math

import numpy as np
import pytest

from gafun.algebra import (Representative, SpaceIndex, WeightFunction, add, differentiate,
                           evaluate, evaluate_mp, moderateness_check, mul, negligibility_check,
                           norm_estimate, product_space, restrict_real, scale, sub,
                           weighted_values)
from gafun.domains import CompactSet, SectorDomain, sample
from gafun.embedding import embed_delta
from gafun.errors import PreconditionError, WeightFormError

DELTA_TEXT = "zeta/(pi*(zeta^2 + z^2))"
K1 = CompactSet((-1.0,), (1.0,))
XI = 0.1 / 2.0 ** np.arange(14)


def rep(text):
    return Representative.from_text(text)


def test_weight_catalog_limits():
    with pytest.raises(WeightFormError):
        WeightFunction(c=0.0)
    with pytest.raises(WeightFormError):
        WeightFunction(c=1e201)
    with pytest.raises(WeightFormError):
        WeightFunction(poly=65)
    with pytest.raises(WeightFormError):
        WeightFunction(shells=(1.0,) * 257)


def test_weight_evaluation_and_sup(fam):
    w = WeightFunction(c=2.0, poly=1, shells=(1.0, 3.0))
    x = np.array([[0.5], [1.5], [4.0]])
    assert w(x, fam.ambient).tolist() == pytest.approx([3.0, 2 * 2.5 * 3, 2 * 5 * 3])
    assert w.sup_on(2) == pytest.approx(2 * 3 * 3)
    assert WeightFunction.from_dict(w.to_dict()) == w


def test_weight_products_dominate(fam):
    a, b = WeightFunction(c=2.0, poly=1), WeightFunction(c=0.5, shells=(1.0, 4.0))
    x = np.linspace(-5, 5, 41)[:, None]
    assert np.all(a.times(b)(x, fam.ambient) == pytest.approx(a(x, fam.ambient) * b(x, fam.ambient)))
    m = a.dominating_max(b)(x, fam.ambient)
    assert np.all(m >= a(x, fam.ambient)) and np.all(m >= b(x, fam.ambient))
    assert a.derivative(3).c == 8.0 and a.derivative(3).blowup == 1


def test_point_evaluation_examples():
    assert evaluate(rep("zeta"), 0.0, 0.5)[0] == pytest.approx(0.5)
    assert evaluate(rep(DELTA_TEXT), 0.0, 0.1)[0] == pytest.approx(10 / math.pi, rel=1e-14)
    mp = complex(evaluate_mp(rep(DELTA_TEXT), 0.0, 0.1))
    assert mp == pytest.approx(10 / math.pi, rel=1e-15)
    assert evaluate(rep("exp(-1/zeta^2)"), 0.0, 0.1)[0] == pytest.approx(math.exp(-100), rel=1e-12)


def test_ring_operations():
    f, g = rep("z^2 + zeta"), rep("exp(z)")
    z, zeta = np.array([0.3 + 0.1j]), np.array([0.05 + 0j])
    assert evaluate(add(f, scale(-1, f)), z, zeta)[0] == 0
    assert evaluate(scale(2, rep("zeta")), 0.0, 0.1)[0] == pytest.approx(0.2)
    assert evaluate(mul(Representative.constant(1.0), f), z, zeta) == pytest.approx(evaluate(f, z, zeta))
    d = embed_delta(0.0)
    assert evaluate(mul(d, d), 0.0, 0.1)[0] == pytest.approx((10 / math.pi) ** 2, rel=1e-14)
    assert evaluate(sub(f, f), z, zeta)[0] == 0


def test_space_propagation(fam):
    s = SpaceIndex(2, WeightFunction(c=2.0), fam)
    f = rep("zeta").with_space(s)
    assert mul(f, f).space.n == 4 and mul(f, f).space.weight.c == 4.0
    assert differentiate(f).space.n == 3
    assert add(f, rep("1")).space is None
    assert product_space(s, None) is None


def test_derivative_examples():
    assert evaluate(differentiate(rep("zeta*z^2")), 1.0, 0.1)[0] == pytest.approx(0.2)
    assert evaluate(differentiate(embed_delta(0.0)), 0.0, 0.1)[0] == 0


def test_derivative_matches_central_difference(rng):
    f = rep("exp(z*zeta)/(zeta^2 + z^2) + atan(z)")
    df = differentiate(f)
    z = rng.uniform(-2, 2, 100) + 1j * rng.uniform(-0.01, 0.01, 100)
    zeta = rng.uniform(0.05, 0.3, 100) + 0j
    h = 1e-5
    fd = (evaluate(f, z + h, zeta) - evaluate(f, z - h, zeta)) / (2 * h)
    assert np.max(np.abs(evaluate(df, z, zeta) - fd) / np.abs(fd)) < 1e-6


def test_differentiate_axis_checked():
    with pytest.raises(PreconditionError):
        differentiate(rep("z"), axis=2)


def test_restrict_real_poisson():
    g = restrict_real(embed_delta(0.0))
    x = np.linspace(-1, 1, 10)
    xi = 0.2
    assert g(x, xi) == pytest.approx(xi / (math.pi * (xi ** 2 + x ** 2)), rel=1e-14)
    f, h = rep("z + zeta"), rep("exp(z)")
    assert restrict_real(mul(f, h))(x, xi) == pytest.approx(restrict_real(f)(x, xi) * restrict_real(h)(x, xi))


def test_norm_estimate_examples(fam):
    n = 2
    s = SpaceIndex(n, WeightFunction(), fam)
    g = sample(SectorDomain(n, fam), 1000, seed=3)
    one = norm_estimate(rep("1"), s, g)
    assert one.estimate == pytest.approx(n ** -n, rel=1e-6) and one.stable
    s1 = SpaceIndex(1, WeightFunction(), fam)
    inv = norm_estimate(rep("1/zeta"), s1, sample(SectorDomain(1, fam), 500, seed=0))
    assert inv.estimate == pytest.approx(1.0, rel=1e-12)
    d = norm_estimate(embed_delta(0.0), s, g)
    bound = embed_delta(0.0).bound["constant"] * (1 / n) ** (n - 1)
    assert d.estimate <= bound + 1e-9 and d.stable


def test_norm_estimate_flags_growth_toward_zero(fam):
    s = SpaceIndex(1, WeightFunction(), fam)
    c = norm_estimate(rep("zeta^(-2)"), s, sample(SectorDomain(1, fam), 500))
    assert not c.stable


def test_norm_estimate_requires_nested_grid(fam):
    s = SpaceIndex(3, WeightFunction(), fam)
    with pytest.raises(PreconditionError):
        norm_estimate(rep("1"), s, sample(SectorDomain(2, fam), 50))


def test_triangle_and_product_inequalities(fam):
    s = SpaceIndex(2, WeightFunction(), fam)
    S = sample(SectorDomain(4, fam), 800, seed=5)
    f, g = embed_delta(0.0), rep("exp(z)*zeta")
    w = lambda h, sp: float(np.max(weighted_values(h, sp, S)))
    assert w(add(f, g), s) <= w(f, s) + w(g, s) + 1e-15
    s2 = SpaceIndex(4, WeightFunction(), fam)
    assert w(mul(f, g), s2) <= w(f, s) * w(g, s) * (1 + 1e-12)


def test_moderateness_examples():
    r = moderateness_check(rep("1/zeta"), K1, XI)
    assert r.passed and r.order == 1
    r = moderateness_check(embed_delta(0.0), K1, XI)
    assert r.passed and r.order == 1
    r = moderateness_check(rep("exp(1/zeta^2)"), K1, np.geomspace(0.5, 0.04, 24))
    assert not r.passed


def test_negligibility_examples():
    assert negligibility_check(rep("0"), K1, XI).passed
    assert negligibility_check(rep("exp(-1/zeta^2)"), K1, np.geomspace(0.5, 0.04, 24)).passed
    r = negligibility_check(rep("zeta^3"), K1, XI)
    assert not r.passed and r.order == 4
