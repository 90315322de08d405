import cmath

import numpy as np
import pytest

from gafun import expr as E
from gafun.errors import BranchCutError, ParseError, PoleError
from gafun.parser import parse


def ev(text, z, zeta=0.1 + 0j):
    e = parse(text)
    return E.evaluate(e, {"z1": np.atleast_1d(complex(z)), "zeta": np.atleast_1d(complex(zeta))}, 1)[0]


def test_precedence_and_unary_minus():
    assert ev("1 + 2*3^2", 0) == 19
    assert ev("-2^2", 0) == -4
    assert ev("(1+2)*3", 0) == 9


def test_variables_and_constants():
    e = parse("z*zeta + pi + i")
    assert E.variables(e) == {"z1", "zeta"}
    assert ev("i^2", 0) == -1
    assert ev("pi", 0) == pytest.approx(np.pi)


def test_multivariable_names():
    e = parse("z1*z2 + zeta", k=2)
    assert E.variables(e) == {"z1", "z2", "zeta"}


@pytest.mark.parametrize("text", ["zeta^^2", "(z", "z +", "exp z", "foo(z)", "z $ 1", "2^0.5"])
def test_parse_errors_carry_position(text):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert 0 <= info.value.position <= len(text)


def test_functions_principal_branch():
    z = -1 + 0.5j
    assert ev("exp(z)", z) == pytest.approx(cmath.exp(z))
    assert ev("log(z)", z) == pytest.approx(cmath.log(z))
    assert ev("sqrt(z)", z) == pytest.approx(cmath.sqrt(z))
    assert ev("atan(z)", z) == pytest.approx(cmath.atan(z))


def test_log_branch_cut_raises():
    with pytest.raises(BranchCutError):
        ev("log(z)", -2.0)


def test_pole_raises_with_point():
    with pytest.raises(PoleError) as info:
        ev("1/z", 0.0)
    assert info.value.point is None or "z1" in info.value.point


def test_smart_constructors_fold():
    z = E.z_var(1)
    assert E.add(z, 0) == z
    assert E.mul(z, 1) == z
    assert E.mul(z, 0) == E.ZERO
    assert E.power(E.power(z, 2), 3) == E.power(z, 6)
    assert E.add(2, 3) == E.const(5)


def test_diff_matches_finite_difference():
    e = parse("exp(z^2)*atan(z) + sqrt(z + 3)/zeta")
    d = E.diff(e, "z1")
    z0, h = 0.3 + 0.2j, 1e-6
    env = lambda z: {"z1": np.array([z]), "zeta": np.array([0.2 + 0j])}
    fd = (E.evaluate(e, env(z0 + h), 1) - E.evaluate(e, env(z0 - h), 1))[0] / (2 * h)
    assert E.evaluate(d, env(z0), 1)[0] == pytest.approx(fd, rel=1e-8)


def test_to_string_roundtrip():
    for text in ["z^2 + 3*z*zeta - 1", "exp(-1/zeta^2)", "zeta/(pi*(zeta^2 + z^2))"]:
        e = parse(text)
        again = parse(E.to_string(e))
        for z in (0.3 + 0.1j, -1.2 + 0.05j):
            assert ev(E.to_string(again), z) == pytest.approx(ev(text, z), rel=1e-14)


def test_substitute_and_mp_evaluation():
    e = parse("z^2 + zeta")
    s = E.substitute(e, {"z1": 2.0})
    assert E.variables(s) == {"zeta"}
    v = E.evaluate_mp(parse("exp(z)"), {"z1": 1, "zeta": 1})
    assert complex(v) == pytest.approx(cmath.e, rel=1e-15)
