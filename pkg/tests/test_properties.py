from fractions import Fraction

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from gafun import expr as E
from gafun.errors import EvaluationError
from gafun.algebra import (Representative, SpaceIndex, WeightFunction, add, differentiate,
                           evaluate, scale, weighted_values)
from gafun.domains import SectorDomain, make_family, sample
from gafun.parser import parse
from gafun.topology import product_weights, weight_mass

FAMILIES = st.sampled_from([make_family("at_infinity"), make_family("at_infinity", side="+"),
                            make_family("point_interior", x0=0.0)])
settings.register_profile("gafun", max_examples=40, deadline=None)
settings.load_profile("gafun")


def atoms():
    return st.sampled_from(["z", "zeta", "1", "2", "pi", "(z + 3)", "(zeta + 1)"])


def expressions():
    binary = st.tuples(st.sampled_from(["+", "-", "*"]), atoms(), atoms()) \
        .map(lambda t: f"({t[1]} {t[0]} {t[2]})")
    unary = st.tuples(st.sampled_from(["exp", "atan", "sqrt"]), atoms()).map(lambda t: f"{t[0]}({t[1]})")
    power = st.tuples(atoms(), st.integers(-2, 3)).map(lambda t: f"{t[0]}^({t[1]})")
    return st.lists(st.one_of(atoms(), binary, unary, power), min_size=1, max_size=4) \
        .map(lambda parts: " + ".join(parts))


@given(FAMILIES, st.integers(1, 6), st.integers(0, 2 ** 16))
def test_sampled_points_lie_in_domain(fam, n, seed):
    V = SectorDomain(n, fam)
    g = sample(V, 200, seed=seed)
    member, _ = V.contains_many(g.x, g.y, g.zeta)
    assert member.all()


@given(expressions())
def test_to_string_roundtrip(text):
    e = parse(text)
    again = parse(E.to_string(e))
    env = {"z1": np.array([0.3 + 0.1j, 1.1 - 0.02j]), "zeta": np.array([0.2 + 0.05j, 0.1 + 0j])}
    a, b = E.evaluate(e, env, 2), E.evaluate(again, env, 2)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@given(expressions(), expressions(), st.floats(-3, 3), st.floats(-3, 3))
def test_derivative_is_linear(s1, s2, a, b):
    f, g = Representative.from_text(s1), Representative.from_text(s2)
    lhs = differentiate(add(scale(a, f), scale(b, g)))
    rhs = add(scale(a, differentiate(f)), scale(b, differentiate(g)))
    z, zeta = np.array([0.4 + 0.01j, -0.7 + 0.05j]), np.array([0.15 + 0.02j, 0.3 + 0j])
    assert np.allclose(evaluate(lhs, z, zeta), evaluate(rhs, z, zeta), rtol=1e-10, atol=1e-10)


weights = st.builds(WeightFunction, c=st.floats(0.1, 10), poly=st.integers(0, 3),
                    shells=st.lists(st.floats(1, 50), max_size=4).map(tuple))


@given(weights, weights)
def test_weight_product_and_max(a, b):
    amb = make_family("at_infinity").ambient
    x = np.linspace(-7, 7, 57)[:, None]
    assert np.allclose(a.times(b)(x, amb), a(x, amb) * b(x, amb), rtol=1e-12)
    m = a.dominating_max(b)(x, amb)
    assert np.all(m >= np.maximum(a(x, amb), b(x, amb)) * (1 - 1e-12))


fractions = st.fractions(min_value=-1, max_value=1, max_denominator=50)


@given(st.lists(fractions, min_size=1, max_size=5), st.lists(fractions, min_size=1, max_size=5))
def test_hull_product_mass(lam, mu):
    def normalize(ws):
        m = sum(abs(w) for w in ws)
        return [w / m for w in ws] if m > 1 else ws

    lam, mu = normalize(lam), normalize(mu)
    w = product_weights(lam, mu)
    assert weight_mass(w) == weight_mass(lam) * weight_mass(mu) <= Fraction(1)


@given(expressions(), expressions(), st.integers(0, 2 ** 16))
def test_triangle_inequality(s1, s2, seed):
    fam = make_family("at_infinity")
    space = SpaceIndex(2, WeightFunction(), fam)
    g = sample(SectorDomain(2, fam), 150, seed=seed)
    f, h = Representative.from_text(s1), Representative.from_text(s2)
    try:
        with np.errstate(all="ignore"):
            nf, nh = weighted_values(f, space, g).max(), weighted_values(h, space, g).max()
            nfh = weighted_values(add(f, h), space, g).max()
    except EvaluationError:
        assume(False)
    if np.isfinite(nf) and np.isfinite(nh):
        assert nfh <= (nf + nh) * (1 + 1e-12)
