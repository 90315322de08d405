"""Embedding of classical objects through convolution with the Cauchy mollifier.

Each embedding returns a Representative whose space index n is the smallest
n >= 2 with O_n disjoint from [lo - 1, hi + 1], where [lo, hi] is the support.
At that index every point of V_n satisfies one of

    * x is at distance >= 1 from the support and |zeta| < 1/n  (B_n points),
    * |arg zeta| < 1/n and |y| < |zeta|/n                     (A_n points),

and in both cases |lam - z -+ i zeta| >= alpha |zeta| for lam in the support,
with alpha = min(cos(1/n) - 1/n, n - 1). The recorded bound constant is

    sup |zeta|^(m+1) |F| <= int|g| * m! / (pi * alpha^(m+1)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import expr as E
from .algebra import Representative, SpaceIndex, WeightFunction, evaluate
from .domains import make_family, sample, SectorDomain
from .errors import (EvaluationError, FamilyMismatchError, PreconditionError)
from .kernels import (CallableDensity, MollifierSpec, PiecewiseLinearDensity, kernel,
                      kernel_margin)
from .parser import parse
from .quadrature import integrate, peak_points

OBJECT_KINDS = ("analytic_function", "continuous_compact", "compact_distribution",
                "constant_at_infinity", "delta")


@dataclass(frozen=True)
class ClassicalObject:
    """A classical function or distribution to be embedded.

    ``pieces`` is a tuple of (derivative order, density) pairs; the object is
    sum_j D^{order_j} density_j plus the constants at infinity.
    """

    kind: str
    pieces: tuple = ()
    x0: float = 0.0
    order: int = 0
    c_minus: float = 0.0
    c_plus: float = 0.0
    jump_at: float = 0.0
    expression: Optional[str] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in OBJECT_KINDS:
            raise PreconditionError(f"unknown object kind {self.kind!r}")
        if self.order < 0 or any(o < 0 for o, _ in self.pieces):
            raise PreconditionError("derivative orders must be nonnegative")
        for _, d in self.pieces:
            lo, hi = d.support()
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise PreconditionError("compact pieces need a bounded support")

    @classmethod
    def delta(cls, x0=0.0, order=0):
        return cls("delta", x0=float(x0), order=int(order), label=f"delta^({order})@{x0:g}")

    @classmethod
    def compact(cls, density):
        return cls("continuous_compact", ((0, density),), label=density.label)

    @classmethod
    def distribution(cls, pieces):
        pieces = tuple((int(o), d) for o, d in pieces)
        label = " + ".join(f"D^{o}[{d.label}]" if o else d.label for o, d in pieces)
        return cls("compact_distribution", pieces, label=label)

    @classmethod
    def constant_at_infinity(cls, c_minus, c_plus=None, density=None, jump_at=0.0):
        c_plus = c_minus if c_plus is None else c_plus
        pieces = () if density is None else ((0, density),)
        return cls("constant_at_infinity", pieces, c_minus=float(c_minus), c_plus=float(c_plus),
                   jump_at=float(jump_at),
                   label=f"const-at-inf({c_minus:g},{c_plus:g})")

    @classmethod
    def heaviside(cls, jump_at=0.0):
        return cls.constant_at_infinity(0.0, 1.0, jump_at=jump_at)

    @classmethod
    def analytic(cls, expression):
        return cls("analytic_function", expression=str(expression), label=str(expression))

    def support(self):
        if self.kind == "delta":
            return (self.x0, self.x0)
        if not self.pieces:
            return (self.jump_at, self.jump_at)
        los, his = zip(*(d.support() for _, d in self.pieces))
        lo, hi = min(los), max(his)
        if self.kind == "constant_at_infinity" and self.c_minus != self.c_plus:
            lo, hi = min(lo, self.jump_at), max(hi, self.jump_at)
        return (lo, hi)


def default_family():
    return make_family("at_infinity")


def kernel_alpha(n):
    """Lower bound of |lam - z -+ i zeta| / |zeta| over V_n for lam in the support."""
    return min(math.cos(1.0 / n) - 1.0 / n, n - 1.0)


def bound_constant(l1, order, n):
    """int|g| * kappa_m / pi with kappa_m = m!/alpha^(m+1)."""
    alpha = kernel_alpha(n)
    kappa = math.factorial(order) / alpha ** (order + 1)
    return l1 * kappa / math.pi, kappa, alpha


def embedding_index(family, lo, hi):
    return family.first_disjoint_index(lo - 1.0, hi + 1.0)


def delta_body(x0=0.0, order=0):
    z, zeta = E.z_var(1), E.ZETA
    body = E.mul(E.power(E.PI, -1), zeta,
                 E.power(E.add(E.power(zeta, 2), E.power(E.sub(z, x0), 2)), -1))
    for _ in range(order):
        body = E.diff(body, "z1")
    return body


def embed_delta(x0=0.0, order=0, family=None):
    """Closed form (1/pi) zeta/(zeta^2 + (z - x0)^2), differentiated ``order`` times in z."""
    family = family or default_family()
    n_embed = embedding_index(family, x0, x0)
    n = max(n_embed, order + 1)
    C, kappa, alpha = bound_constant(1.0, order, n)
    bound = {"constant": C, "power": order + 1, "kappa": kappa, "alpha": alpha,
             "l1": 1.0, "support": [x0, x0], "n_embed": n_embed}
    return Representative(delta_body(x0, order), SpaceIndex(n, WeightFunction(), family),
                          f"embed delta^({order}) at {x0:g}", 1, (float(x0),), bound)


def _density_of(obj_or_density):
    if isinstance(obj_or_density, ClassicalObject):
        return obj_or_density
    return ClassicalObject.compact(obj_or_density)


def embed_compact(obj, family=None, spec=MollifierSpec()):
    """sum_j Conv(g_j, order_j): derivatives moved onto the kernel."""
    if spec.s != 1:
        raise NotImplementedError("convolution embeddings use the s = 1 kernel")
    obj = _density_of(obj)
    if obj.kind not in ("continuous_compact", "compact_distribution") or not obj.pieces:
        raise PreconditionError(f"embed_compact needs compact pieces, got {obj.kind}")
    family = family or default_family()
    lo, hi = obj.support()
    n_embed = embedding_index(family, lo, hi)
    top = max(o for o, _ in obj.pieces)
    n = max(n_embed, top + 1)
    z, zeta = E.z_var(1), E.ZETA
    terms, C, feats = [], 0.0, set()
    alpha = kernel_alpha(n)
    for order, d in obj.pieces:
        terms.append(E.Conv(d, order, z, zeta))
        # |zeta|^(top+1) <= |zeta|^(order+1) * (1/n)^(top-order) on V_n
        c, _, _ = bound_constant(d.l1_norm(), order, n)
        C += c * (1.0 / n) ** (top - order)
        feats.update(np.asarray(d.features()).tolist())
    bound = {"constant": C, "power": top + 1, "alpha": alpha,
             "kappa": math.factorial(top) / alpha ** (top + 1),
             "l1": float(sum(d.l1_norm() for _, d in obj.pieces)), "support": [lo, hi],
             "n_embed": n_embed}
    return Representative(E.add(*terms), SpaceIndex(n, WeightFunction(), family),
                          f"embed {obj.label}", 1, tuple(sorted(feats)), bound)


def embed_constant_at_infinity(obj, family=None, spec=MollifierSpec()):
    """c + Conv(f - c); with c- != c+ the family must be one-sided at infinity.

    With side '+', F = c+ + Conv(g + (c- - c+) 1_(-inf, jump)); side '-' is symmetric.
    """
    if spec.s != 1:
        raise NotImplementedError("convolution embeddings use the s = 1 kernel")
    family = family or default_family()
    if obj.kind != "constant_at_infinity":
        raise PreconditionError(f"expected a constant_at_infinity object, got {obj.kind}")
    two = obj.c_minus != obj.c_plus
    if two and (family.kind != "at_infinity" or family.side == "both"):
        raise FamilyMismatchError(
            "distinct constants at -inf and +inf need a one-sided at_infinity family")
    pieces = [d for _, d in obj.pieces]
    if not two:
        c, tail = obj.c_plus, None
    elif family.side == "+":
        c = obj.c_plus
        tail = PiecewiseLinearDensity([(-math.inf, obj.jump_at, obj.c_minus - c,
                                        obj.c_minus - c)], "left-tail")
    else:
        c = obj.c_minus
        tail = PiecewiseLinearDensity([(obj.jump_at, math.inf, obj.c_plus - c,
                                        obj.c_plus - c)], "right-tail")
    lo, hi = obj.support()
    n = max(embedding_index(family, lo, hi), 2)
    alpha = kernel_alpha(n)
    z, zeta = E.z_var(1), E.ZETA
    terms = [E.const(c)] if c != 0 else []
    C = abs(c) / n
    feats = set()
    for d in pieces:
        terms.append(E.Conv(d, 0, z, zeta))
        C += bound_constant(d.l1_norm(), 0, n)[0]
        feats.update(np.asarray(d.features()).tolist())
    if tail is not None:
        terms.append(E.Conv(tail, 0, z, zeta))
        # |Conv(tail)| <= |jump| / alpha on V_n
        C += abs(obj.c_plus - obj.c_minus) / alpha / n
        feats.add(obj.jump_at)
    body = E.add(*terms) if terms else E.ZERO
    bound = {"constant": C, "power": 1, "alpha": alpha, "support": [lo, hi],
             "constants": [obj.c_minus, obj.c_plus]}
    return Representative(body, SpaceIndex(n, WeightFunction(), family),
                          f"embed {obj.label}", 1, tuple(sorted(feats)), bound)


def embed_polynomial_at_infinity(coeffs, density=None, family=None):
    """p(z) + Conv(g) for f = p + g with g compactly supported and p the same on both sides."""
    family = family or default_family()
    coeffs = [float(c) for c in coeffs]
    deg = len(coeffs) - 1
    while deg > 0 and coeffs[deg] == 0:
        deg -= 1
    if deg > 4:
        raise NotImplementedError("polynomial tails above degree 4 are not supported")
    z = E.z_var(1)
    poly = E.add(*(E.mul(c, E.power(z, j)) for j, c in enumerate(coeffs[:deg + 1])))
    terms, feats, lo, hi = [poly], set(), 0.0, 0.0
    if density is not None:
        terms.append(E.Conv(density, 0, z, E.ZETA))
        feats.update(np.asarray(density.features()).tolist())
        lo, hi = density.support()
    n = max(embedding_index(family, lo, hi), 2)
    # |p(x + iy)| <= sum|c_j| (1 + |x| + 1/n)^j <= sum|c_j| (1 + 1/n)^deg (1 + |x|)^deg
    c = sum(abs(v) for v in coeffs) * (1.0 + 1.0 / n) ** deg or 1.0
    weight = WeightFunction(c=max(c, 1.0), poly=deg)
    return Representative(E.add(*terms), SpaceIndex(n, weight, family),
                          f"embed polynomial-at-infinity deg {deg}", 1, tuple(sorted(feats)))


def embed_two_polynomials_at_infinity(p_minus, p_plus, density=None, family=None):
    if list(p_minus) != list(p_plus):
        raise NotImplementedError("distinct polynomial tails at -inf and +inf are not supported")
    return embed_polynomial_at_infinity(p_plus, density, family)


def embed_analytic(f, alpha=1.0, family=None, check=True, weight=None, span=10.0, m=41):
    """zeta-independent representative F(z, zeta) = f(z).

    With ``check`` the body is evaluated on x in [-span, span], |y| < alpha/2.
    """
    body = parse(f) if isinstance(f, str) else f
    if "zeta" in E.variables(body):
        raise PreconditionError("analytic functions must not depend on zeta")
    if check:
        xs = np.linspace(-span, span, m)
        ys = np.linspace(-0.5, 0.5, 9)[1:-1] * alpha
        zz = (xs[:, None] + 1j * ys[None, :]).ravel()
        try:
            with np.errstate(all="ignore"):
                vals = E.evaluate(body, {"z1": zz, "zeta": np.full(len(zz), 0.1 + 0j)}, len(zz))
        except EvaluationError as err:
            raise EvaluationError(f"analytic function fails inside the strip |y| < {alpha / 2:g}: "
                                  f"{err}", err.index) from err
        if not np.all(np.isfinite(vals)):
            i = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise EvaluationError("non-finite value inside the asserted strip", i,
                                  {"z1": complex(zz[i])})
    family = family or default_family()
    space = SpaceIndex(1, weight, family) if weight is not None else None
    return Representative(body, space, f"embed analytic {E.to_string(body)}", 1, (),
                          {"strip_alpha": alpha})


def embed(obj, family=None, spec=MollifierSpec()):
    """Dispatch on the object kind."""
    if obj.kind == "delta":
        return embed_delta(obj.x0, obj.order, family)
    if obj.kind in ("continuous_compact", "compact_distribution"):
        return embed_compact(obj, family, spec)
    if obj.kind == "constant_at_infinity":
        return embed_constant_at_infinity(obj, family, spec)
    return embed_analytic(obj.expression, family=family)


def gaussian_density(center=0.0, width=1.0, cutoff=12.0, label=None):
    """Unit-mass Gaussian truncated at |x - center| <= cutoff*width (callable density)."""
    w = float(width)

    def g(t):
        return np.exp(-0.5 * ((t - center) / w) ** 2) / (w * math.sqrt(2 * math.pi))

    return CallableDensity(g, center - cutoff * w, center + cutoff * w,
                           label or f"gauss({center:g},{w:g})", breakpoints=[center])


# -- certified checks ---------------------------------------------------------------

def kernel_safety(rep, grid):
    """Kernel denominators stay away from zero on the grid.

    Returns (min margin, alpha, passed) where margin is min over the support of
    |(lam - z)/zeta -+ i| and the recorded alpha must not exceed it.
    """
    if not rep.bound or "alpha" not in rep.bound:
        raise PreconditionError("representative carries no kernel constant")
    lo, hi = rep.bound["support"]
    margin = kernel_margin(grid.z[:, 0], grid.zeta, lo, hi)
    m = float(np.min(margin))
    alpha = rep.bound["alpha"]
    return m, alpha, bool(m >= alpha * (1 - 1e-12))


def sampled_kernel_sup(rep, grid, m=64):
    """Sup of pi |zeta|^(order+1) |K_order(lam, z, zeta)| over grid points and support nodes.

    Diagnostic for the recorded kappa, which must dominate this value.
    """
    lo, hi = rep.bound["support"]
    order = rep.bound["power"] - 1
    lam = np.linspace(lo, hi, m) if hi > lo else np.array([lo])
    z = grid.z[:, 0][:, None]
    zeta = grid.zeta[:, None]
    k = kernel(lam[None, :], z, zeta, order)
    return float(np.max(math.pi * np.abs(zeta) ** (order + 1) * np.abs(k)))


def bound_check(rep, grid):
    """(sampled sup of |zeta|^p |F|, recorded constant)."""
    p = rep.bound["power"]
    vals = evaluate(rep, grid.z[:, 0], grid.zeta)
    return float(np.max(np.abs(grid.zeta) ** p * np.abs(vals))), rep.bound["constant"]


def mass_check(z, zeta, abs_tol=1e-11):
    """(1/pi) zeta^-1 int_R dlam / (1 + ((lam - z)/zeta)^2) by adaptive quadrature.

    Equals 1 when Re zeta > |Im z|; the result array holds one value per point.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    out = np.empty(len(z), dtype=complex)
    for i, (zi, ci) in enumerate(zip(z, zeta)):
        # the kernel depends on lam - z only; shifting by Re z avoids cancellation
        # in lam - z when |zeta| is far below |z|
        w = 1j * zi.imag
        ap, am = w + 1j * ci, w - 1j * ci
        pts = peak_points([ap.real, am.real], [abs(ap.imag), abs(am.imag)], -np.inf, np.inf)
        res = integrate(lambda t: kernel(t, w, ci, 0), -np.inf, np.inf, pts, abs_tol, abs_tol,
                        scale=max(abs(ci), 1e-300))
        out[i] = res.value
    return out
