"""Expression trees over z1..zk and zeta.

Nodes are immutable and hashable. Build them through the smart constructors
(``add``, ``mul``, ``power``, ``func``...) which flatten sums/products and fold
constants, so structurally equal inputs give equal trees.

A ``Conv`` leaf stands for a convolution of a real density with the z-derivative
of order ``order`` of the Cauchy mollifier; its density object supplies the
numerics (see ``kernels``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import mpmath
import numpy as np

from .errors import BranchCutError, EvaluationError, PoleError

FUNCTIONS = ("exp", "log", "atan", "sqrt")


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(-1, self)

    def __pow__(self, k):
        return power(self, k)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: complex
    label: Any = None

    def __repr__(self):
        return f"Const({to_string(self)})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True, repr=False)
class Add(Expr):
    terms: tuple

    def __repr__(self):
        return f"Add({to_string(self)})"


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    factors: tuple

    def __repr__(self):
        return f"Mul({to_string(self)})"


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exp: int

    def __repr__(self):
        return f"Pow({to_string(self)})"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __repr__(self):
        return f"Func({to_string(self)})"


@dataclass(frozen=True, repr=False)
class Conv(Expr):
    density: Any
    order: int
    arg: Expr
    zeta: Expr

    def __repr__(self):
        return f"Conv({to_string(self)})"


ZERO = Const(0j)
ONE = Const(1 + 0j)
PI = Const(complex(math.pi), "pi")
I = Const(1j, "i")
ZETA = Var("zeta")


def z_var(i=1):
    return Var(f"z{i}")


def const(v):
    if isinstance(v, Expr):
        return v
    return Const(complex(v))


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def add(*terms):
    flat, c = [], 0j
    for t in map(const, terms):
        parts = t.terms if isinstance(t, Add) else (t,)
        for p in parts:
            if isinstance(p, Const) and p.label is None:
                c += p.value
            else:
                flat.append(p)
    if c != 0 or not flat:
        flat.append(Const(c))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def mul(*factors):
    flat, c = [], 1 + 0j
    for f in map(const, factors):
        parts = f.factors if isinstance(f, Mul) else (f,)
        for p in parts:
            if isinstance(p, Const) and p.label is None:
                c *= p.value
            else:
                flat.append(p)
    if c == 0:
        return ZERO
    if c != 1 or not flat:
        flat.insert(0, Const(c))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def power(base, k):
    if int(k) != k:
        raise ValueError(f"only integer exponents are supported, got {k}")
    k = int(k)
    base = const(base)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const) and base.label is None and (base.value != 0 or k > 0):
        return Const(base.value ** k)
    if isinstance(base, Pow):
        return power(base.base, base.exp * k)
    return Pow(base, k)


def sub(a, b):
    return add(a, mul(-1, b))


def div(a, b):
    return mul(a, power(b, -1))


def func(name, arg):
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Func(name, const(arg))


def exp(a):
    return func("exp", a)


def log(a):
    return func("log", a)


def atan(a):
    return func("atan", a)


def sqrt(a):
    return func("sqrt", a)


def variables(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    out = set()
    for c in children(e):
        out |= variables(c)
    return out


def children(e):
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Func):
        return (e.arg,)
    if isinstance(e, Conv):
        return (e.arg, e.zeta)
    return ()


def conv_leaves(e):
    if isinstance(e, Conv):
        return [e] + conv_leaves(e.arg) + conv_leaves(e.zeta)
    return [leaf for c in children(e) for leaf in conv_leaves(c)]


def substitute(e, mapping):
    """Replace variables by expressions; ``mapping`` maps names to Expr/numbers."""
    if isinstance(e, Var):
        return const(mapping[e.name]) if e.name in mapping else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return add(*(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), e.exp)
    if isinstance(e, Func):
        return func(e.name, substitute(e.arg, mapping))
    if isinstance(e, Conv):
        return Conv(e.density, e.order, substitute(e.arg, mapping), substitute(e.zeta, mapping))
    raise TypeError(f"unknown node {e!r}")


def diff(e, var):
    """Exact symbolic derivative with respect to the variable named ``var``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, var) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            df = diff(f, var)
            if _is_const(df, 0):
                continue
            terms.append(mul(*e.factors[:i], df, *e.factors[i + 1:]))
        return add(*terms) if terms else ZERO
    if isinstance(e, Pow):
        db = diff(e.base, var)
        if _is_const(db, 0):
            return ZERO
        return mul(e.exp, power(e.base, e.exp - 1), db)
    if isinstance(e, Func):
        da = diff(e.arg, var)
        if _is_const(da, 0):
            return ZERO
        a = e.arg
        if e.name == "exp":
            return mul(e, da)
        if e.name == "log":
            return mul(da, power(a, -1))
        if e.name == "atan":
            return mul(da, power(add(1, power(a, 2)), -1))
        return mul(0.5, da, power(e, -1))
    if isinstance(e, Conv):
        if var in variables(e.zeta):
            raise NotImplementedError("zeta-derivatives of convolution leaves are not supported")
        da = diff(e.arg, var)
        if _is_const(da, 0):
            return ZERO
        return mul(Conv(e.density, e.order + 1, e.arg, e.zeta), da)
    raise TypeError(f"unknown node {e!r}")


# -- printing ---------------------------------------------------------------

def _num(v):
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _const_str(c):
    if c.label:
        return c.label
    v = c.value
    if v.imag == 0:
        return _num(v.real)
    if v.real == 0:
        return "i" if v.imag == 1 else f"{_num(v.imag)}*i"
    return f"({_num(v.real)}+{_num(v.imag)}*i)"


_PREC = {Add: 1, Mul: 2, Pow: 4}


def _prec(e):
    if isinstance(e, Const):
        v = e.value
        neg = (v.imag == 0 and v.real < 0) or (v.real == 0 and v.imag < 0)
        return 2 if neg else 5
    return _PREC.get(type(e), 5)


def to_string(e):
    if isinstance(e, Const):
        return _const_str(e)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        out = to_string(e.terms[0])
        for t in e.terms[1:]:
            s = to_string(t)
            out += f" - {s[1:]}" if s.startswith("-") and _prec(t) >= 2 else f" + {s}"
        return out
    if isinstance(e, Mul):
        parts = []
        for f in e.factors:
            s = to_string(f)
            parts.append(f"({s})" if _prec(f) < 2 or (parts and s.startswith("-")) else s)
        if parts[0] == "-1" and len(parts) > 1:
            return "-" + "*".join(parts[1:])
        return "*".join(parts)
    if isinstance(e, Pow):
        s = to_string(e.base)
        if _prec(e.base) < 5:
            s = f"({s})"
        return f"{s}^{e.exp}" if e.exp > 0 else f"{s}^({e.exp})"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Conv):
        d = "" if e.order == 0 else f"D{e.order}"
        return f"conv{d}[{e.density.label}]({to_string(e.arg)}, {to_string(e.zeta)})"
    raise TypeError(f"unknown node {e!r}")


# -- numerics ---------------------------------------------------------------

def _first(mask):
    return int(np.flatnonzero(np.atleast_1d(mask))[0])


def evaluate(e, env, size=None):
    """Evaluate on arrays; ``env`` maps variable names to complex arrays.

    Raises PoleError / BranchCutError with the index of the first bad point.
    """
    if size is None:
        size = len(next(iter(env.values()))) if env else 1
    memo = {}
    with np.errstate(all="ignore"):
        return np.broadcast_to(_ev(e, env, memo), (size,)).astype(complex)


def _ev(e, env, memo):
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        out = np.complex128(e.value)
    elif isinstance(e, Var):
        if e.name not in env:
            raise EvaluationError(f"unbound variable {e.name}")
        out = np.asarray(env[e.name], dtype=complex)
    elif isinstance(e, Add):
        out = _ev(e.terms[0], env, memo)
        for t in e.terms[1:]:
            out = out + _ev(t, env, memo)
    elif isinstance(e, Mul):
        out = _ev(e.factors[0], env, memo)
        for f in e.factors[1:]:
            out = out * _ev(f, env, memo)
    elif isinstance(e, Pow):
        b = _ev(e.base, env, memo)
        if e.exp < 0:
            zero = np.atleast_1d(b == 0)
            if zero.any():
                raise PoleError(f"division by zero in {to_string(e)}", _first(zero))
        out = b ** e.exp
    elif isinstance(e, Func):
        a = _ev(e.arg, env, memo)
        out = _func_np(e.name, a)
    elif isinstance(e, Conv):
        z = np.atleast_1d(_ev(e.arg, env, memo))
        zeta = np.atleast_1d(_ev(e.zeta, env, memo))
        z, zeta = np.broadcast_arrays(z, zeta)
        out = e.density.convolve(z, zeta, e.order)
    else:
        raise TypeError(f"unknown node {e!r}")
    memo[key] = out
    return out


def _func_np(name, a):
    a = np.asarray(a, dtype=complex)
    if name == "exp":
        return np.exp(a)
    re, im = np.atleast_1d(a.real), np.atleast_1d(a.imag)
    if name == "log":
        zero = (re == 0) & (im == 0)
        if zero.any():
            raise PoleError("log(0)", _first(zero))
        cut = (im == 0) & (re < 0)
        if cut.any():
            raise BranchCutError("log argument on the branch cut (-inf, 0)", _first(cut))
        return np.log(a)
    if name == "sqrt":
        cut = (im == 0) & (re < 0)
        if cut.any():
            raise BranchCutError("sqrt argument on the branch cut (-inf, 0)", _first(cut))
        return np.sqrt(a)
    pole = (re == 0) & (np.abs(im) == 1)
    if pole.any():
        raise PoleError("atan pole at +-i", _first(pole))
    cut = (re == 0) & (np.abs(im) > 1)
    if cut.any():
        raise BranchCutError("atan argument on the branch cut i*(1, inf)", _first(cut))
    return np.arctan(a)


def evaluate_mp(e, env, dps=40):
    """Single-point evaluation in software extended precision."""
    with mpmath.workdps(dps):
        env = {k: mpmath.mpc(v) for k, v in env.items()}
        return complex(_ev_mp(e, env, {}))


def _ev_mp(e, env, memo):
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        if e.label == "pi":
            out = mpmath.mpc(mpmath.pi)
        else:
            out = mpmath.mpc(e.value)
    elif isinstance(e, Var):
        if e.name not in env:
            raise EvaluationError(f"unbound variable {e.name}")
        out = env[e.name]
    elif isinstance(e, Add):
        out = mpmath.fsum(_ev_mp(t, env, memo) for t in e.terms)
    elif isinstance(e, Mul):
        out = mpmath.mpc(1)
        for f in e.factors:
            out *= _ev_mp(f, env, memo)
    elif isinstance(e, Pow):
        b = _ev_mp(e.base, env, memo)
        if e.exp < 0 and b == 0:
            raise PoleError(f"division by zero in {to_string(e)}", 0)
        out = b ** e.exp
    elif isinstance(e, Func):
        a = _ev_mp(e.arg, env, memo)
        if e.name == "exp":
            out = mpmath.exp(a)
        elif e.name == "log":
            if a == 0:
                raise PoleError("log(0)", 0)
            if a.imag == 0 and a.real < 0:
                raise BranchCutError("log argument on the branch cut", 0)
            out = mpmath.log(a)
        elif e.name == "sqrt":
            if a.imag == 0 and a.real < 0:
                raise BranchCutError("sqrt argument on the branch cut", 0)
            out = mpmath.sqrt(a)
        else:
            if a.real == 0 and abs(a.imag) >= 1:
                raise (PoleError if abs(a.imag) == 1 else BranchCutError)("atan singularity", 0)
            out = mpmath.atan(a)
    elif isinstance(e, Conv):
        out = e.density.convolve_mp(_ev_mp(e.arg, env, memo), _ev_mp(e.zeta, env, memo), e.order)
    else:
        raise TypeError(f"unknown node {e!r}")
    memo[key] = out
    return out
