"""Laurent-series diagnostics, generalized numbers, pairings and association."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expr as E
from .algebra import Representative, evaluate, tail_slope, SLOPE_TOL, MIN_FIT_POINTS
from .domains import sample_sector
from .errors import DomainError, EvaluationError, FitError, PreconditionError
from .quadrature import integrate, peak_points

LAURENT_ZERO_TOL = 1e-9
ASSOCIATION_TOL = 1e-4


class SupportWarning(UserWarning):
    """Test-function support not contained in O_n."""


# -- Laurent series --------------------------------------------------------------

@dataclass(frozen=True)
class LaurentSeries:
    center: float
    radius: float
    J: int
    coefficients: np.ndarray  # a_j for j = -J..J
    residual: float
    M: int

    def coeff(self, j):
        if abs(j) > self.J:
            raise IndexError(f"coefficient index {j} outside [-{self.J}, {self.J}]")
        return complex(self.coefficients[j + self.J])

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        js = np.arange(-self.J, self.J + 1)
        return np.sum(self.coefficients[None, :] * zeta.reshape(-1, 1) ** js[None, :], axis=1)

    def to_dict(self):
        return {"center": self.center, "radius": self.radius, "J": self.J, "M": self.M,
                "residual": self.residual,
                "coefficients": [[j, float(c.real), float(c.imag)]
                                 for j, c in zip(range(-self.J, self.J + 1), self.coefficients)]}


def laurent(f, x, r=None, J=16, n=None, family=None):
    """Trapezoidal contour coefficients of zeta -> f(x, zeta) on |zeta| = r.

    x must lie in O_n so that the whole punctured disk 0 < |zeta| < 1/n belongs to V_n.
    """
    space = f.space
    n = n if n is not None else (space.n if space else None)
    family = family or (space.family if space else None)
    if n is None or family is None:
        raise PreconditionError("laurent needs an index n and a family")
    if not bool(family.in_O(float(x), n)[0]):
        raise DomainError(f"x={x} is not in O_{n}; the A-branch lacks a full zeta-circle")
    r = 1.0 / (2 * n) if r is None else float(r)
    if not 0 < r < 1.0 / n:
        raise DomainError(f"radius must lie in (0, 1/{n})")
    M = max(256, 8 * J + 16)
    theta = 2 * np.pi * np.arange(M) / M
    zeta = r * np.exp(1j * theta)
    vals = evaluate(f, np.full(M, float(x), dtype=complex), zeta)
    c = np.fft.fft(vals) / M
    js = np.arange(-J, J + 1)
    coeffs = c[js % M] * r ** (-js.astype(float))
    # residual on the interleaved circle
    zeta2 = r * np.exp(1j * (theta + np.pi / M))
    vals2 = evaluate(f, np.full(M, float(x), dtype=complex), zeta2)
    series = LaurentSeries(float(x), r, J, coeffs, 0.0, M)
    resid = float(np.max(np.abs(vals2 - series(zeta2))))
    return LaurentSeries(float(x), r, J, coeffs, resid, M)


# -- generalized numbers ------------------------------------------------------------

@dataclass(frozen=True)
class GeneralizedNumber:
    """A function of zeta alone on the sector |arg zeta| < 1/n, 0 < |zeta| < 1/n."""

    func: Callable = field(compare=False)
    n: int = 1
    label: str = ""
    body: Optional[E.Expr] = None

    def __call__(self, zeta):
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        return np.asarray(self.func(zeta), dtype=complex)

    @classmethod
    def from_expr(cls, e, n=1):
        body = e if isinstance(e, E.Expr) else Representative.from_text(e).body
        if E.variables(body) - {"zeta"}:
            raise PreconditionError("generalized numbers depend on zeta only")

        def f(zeta):
            return E.evaluate(body, {"zeta": zeta}, len(zeta))

        return cls(f, n, E.to_string(body), body)

    @classmethod
    def constant(cls, c, n=1):
        return cls.from_expr(E.const(c), n)


def pointvalue(f, x):
    """zeta -> f(x, zeta) with the index of f."""
    n = f.space.n if f.space else 1
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    body = E.substitute(f.body, {f"z{i + 1}": float(v) for i, v in enumerate(xs)})

    def g(zeta):
        zeta = np.atleast_1d(zeta)
        z = np.tile(xs.astype(complex), (len(zeta), 1))
        return evaluate(f, z if f.k > 1 else z[:, 0], zeta)

    return GeneralizedNumber(g, n, f"{f} at x={x}", body)


def gn_add(a, b):
    return GeneralizedNumber(lambda z: a(z) + b(z), max(a.n, b.n), f"({a.label}) + ({b.label})",
                             E.add(a.body, b.body) if a.body is not None and b.body is not None
                             else None)


def gn_mul(a, b):
    return GeneralizedNumber(lambda z: a(z) * b(z), a.n + b.n, f"({a.label})*({b.label})",
                             E.mul(a.body, b.body) if a.body is not None and b.body is not None
                             else None)


def gn_inverse(a):
    return GeneralizedNumber(lambda z: 1.0 / a(z), a.n, f"1/({a.label})",
                             E.power(a.body, -1) if a.body is not None else None)


def gn_norm(a, n=None, budget=4000, zeta_floor=1e-8, seed=0):
    """max over sector samples of |zeta|^n |a(zeta)| (sampled, not a proof)."""
    n = a.n if n is None else n
    zeta = sample_sector(n, budget, zeta_floor, seed)
    with np.errstate(all="ignore"):
        w = np.abs(zeta) ** n * np.abs(a(zeta))
    w = np.where(np.isnan(w), np.inf, w)
    return float(np.max(w))


@dataclass(frozen=True)
class InvertibilityVerdict:
    invertible_so_far: bool
    m: Optional[int]
    detail: str

    def to_dict(self):
        return {"invertible_so_far": self.invertible_so_far, "m": self.m, "detail": self.detail}


def gn_invertibility_probe(a, m_max=12, n=None, xi=None, budget=2000):
    """Look for |zeta|^m |1/a| bounded with m <= m_max on sector samples and on real xi."""
    n = a.n if n is None else n
    xi = np.geomspace(0.5 / n, 1e-6, 61) if xi is None else np.sort(np.asarray(xi))[::-1]
    with np.errstate(all="ignore"):
        inv = np.abs(1.0 / a(xi.astype(complex)))
    slope = tail_slope(xi, inv, tail=max(MIN_FIT_POINTS, len(xi) // 4))
    if not math.isfinite(slope):
        if slope == math.inf:
            return InvertibilityVerdict(True, 0, "1/a vanishes on the tail")
        return InvertibilityVerdict(False, None, "1/a overflows on real xi")
    zeta = np.concatenate([sample_sector(n, budget, 1e-6), xi.astype(complex)])
    va = a(zeta)
    zero = va == 0
    if zero.any():
        i = int(np.flatnonzero(zero)[0])
        return InvertibilityVerdict(False, None,
                                    f"a evaluates to 0 on the sector at zeta={zeta[i]:.3g}")
    m = max(0, int(math.ceil(-slope - SLOPE_TOL)))
    if m > m_max:
        return InvertibilityVerdict(False, None, f"1/a grows like xi^{slope:.3g}")
    with np.errstate(all="ignore"):
        w = np.abs(zeta) ** m / np.abs(va)
    if not np.all(np.isfinite(w)):
        return InvertibilityVerdict(False, None, "1/a overflows on sector samples")
    return InvertibilityVerdict(True, m, f"|zeta|^{m}|1/a| <= {float(np.max(w)):.3g} on samples")


# -- null test -------------------------------------------------------------------

@dataclass(frozen=True)
class NullTestResult:
    zero: bool
    witness: Optional[dict]
    series: tuple = ()
    sector_norms: tuple = ()

    def to_dict(self):
        return {"zero": self.zero, "witness": self.witness,
                "series": [s.to_dict() for s in self.series],
                "sector_norms": list(self.sector_norms)}


def null_test(f, probes, J=16, tol=LAURENT_ZERO_TOL, n=None, family=None, sector_budget=4000):
    """Two-stage zero test: Laurent coefficients at probes in O_n, then sector norms.

    Verdict ``zero`` means every probed coefficient and residual is below ``tol``
    and the sector norm at every probe is below ``tol``.
    """
    n = n if n is not None else (f.space.n if f.space else None)
    if n is None:
        raise PreconditionError("null_test needs an index n")
    series = []
    for x in probes:
        s = laurent(f, x, J=J, n=n, family=family)
        series.append(s)
        mags = np.abs(s.coefficients)
        j = int(np.argmax(mags))
        if mags[j] >= tol:
            return NullTestResult(False, {"stage": "laurent", "x": float(x), "j": j - J,
                                          "a_j": [float(s.coefficients[j].real),
                                                  float(s.coefficients[j].imag)]}, tuple(series))
        if s.residual >= tol:
            return NullTestResult(False, {"stage": "laurent-residual", "x": float(x),
                                          "residual": s.residual}, tuple(series))
    norms = []
    for x in probes:
        g = gn_norm(pointvalue(f, x), n, budget=sector_budget)
        norms.append(g)
        if not g < tol:
            return NullTestResult(False, {"stage": "sector-norm", "x": float(x), "norm": g},
                                  tuple(series), tuple(norms))
    return NullTestResult(True, None, tuple(series), tuple(norms))


# -- test functions and pairings -------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Catalog of test functions with exact support.

    * ``gaussian``: exp(-((x - center)/width)^2) on |x - center| <= cutoff.
    * ``bump``: poly(x - center) * (1 + cos(pi (x - center)/radius))/2 on |x - center| <= radius.
    """

    __test__ = False

    kind: str
    center: float = 0.0
    width: float = 1.0
    cutoff: float = 8.0
    coeffs: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in ("gaussian", "bump"):
            raise PreconditionError(f"unknown test function kind {self.kind!r}")
        if self.width <= 0 or self.cutoff <= 0:
            raise PreconditionError("test function scales must be positive")

    @classmethod
    def gaussian(cls, center=0.0, width=1.0, cutoff=8.0):
        return cls("gaussian", float(center), float(width), float(cutoff))

    @classmethod
    def bump(cls, center=0.0, radius=1.0, coeffs=(1.0,)):
        return cls("bump", float(center), float(radius), float(radius), tuple(map(float, coeffs)))

    def support(self):
        return (self.center - self.cutoff, self.center + self.cutoff)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t = x - self.center
        inside = np.abs(t) <= self.cutoff
        if self.kind == "gaussian":
            v = np.exp(-(t / self.width) ** 2)
        else:
            v = np.polyval(self.coeffs[::-1], t) * 0.5 * (1 + np.cos(np.pi * t / self.cutoff))
        return np.where(inside, v, 0.0)

    def integral(self):
        lo, hi = self.support()
        return integrate(self, lo, hi, [self.center], 1e-13, 1e-13).value.real

    def to_dict(self):
        return {"kind": self.kind, "center": self.center, "width": self.width,
                "cutoff": self.cutoff, "coeffs": list(self.coeffs)}


def _pair_points(f, phi, scale):
    lo, hi = phi.support()
    feats = [p for p in f.features if lo < p < hi]
    pts = peak_points(feats, [scale] * len(feats), lo, hi,
                      factors=(0.0, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0)) if feats else []
    return np.concatenate([np.asarray(pts, dtype=float), [phi.center]])


def pair_value(f, phi, zeta, abs_tol=1e-13, rel_tol=1e-12):
    """int f(x, zeta) phi(x) dx over the support of phi, for one zeta."""
    lo, hi = phi.support()
    zeta = complex(zeta)

    def g(x):
        return evaluate(f, x.astype(complex), np.full(len(x), zeta)) * phi(x)

    return integrate(g, lo, hi, _pair_points(f, phi, abs(zeta)), abs_tol, rel_tol).value


def pair(f, phi, abs_tol=1e-13, rel_tol=1e-12):
    """zeta -> int f(x, zeta) phi(x) dx as a generalized number."""
    space = f.space
    if space is not None and space.family.k == 1:
        lo, hi = phi.support()
        probe = np.linspace(lo, hi, 257)
        if not np.all(space.family.in_O(probe, space.n)):
            warnings.warn(f"test-function support [{lo:g}, {hi:g}] is not inside O_{space.n}",
                          SupportWarning, stacklevel=2)

    def g(zeta):
        return np.array([pair_value(f, phi, z, abs_tol, rel_tol) for z in np.atleast_1d(zeta)])

    return GeneralizedNumber(g, space.n if space else 1, f"<{f}, {phi.kind}>")


@dataclass(frozen=True)
class Association:
    divergent: bool
    limit: Optional[complex]
    order: Optional[float]
    confidence: Optional[float]
    low_confidence: bool
    xi: np.ndarray = field(compare=False)
    values: np.ndarray = field(compare=False)
    windows: tuple = ()

    def to_dict(self):
        lim = None if self.limit is None else [float(self.limit.real), float(self.limit.imag)]
        return {"divergent": self.divergent, "limit": lim, "order": self.order,
                "confidence": self.confidence, "low_confidence": self.low_confidence,
                "windows": [list(map(float, w)) for w in self.windows]}


def richardson_windows(xi, P):
    """Three-point fits P ~ L + b xi^p on consecutive windows of a geometric grid."""
    out = []
    for i in range(len(xi) - 2):
        r = xi[i] / xi[i + 1]
        d1, d2 = P[i] - P[i + 1], P[i + 1] - P[i + 2]
        if d2 == 0 or d1 == 0:
            out.append((xi[i + 2], P[i + 2], math.inf))
            continue
        p = math.log(abs(d1 / d2)) / math.log(r)
        if p == 0:
            out.append((xi[i + 2], math.nan, p))
            continue
        L = P[i + 2] - d2 / (r ** p - 1)
        out.append((xi[i + 2], L, p))
    return out


def associate(f, phi, xi, tol=ASSOCIATION_TOL, divergence_slope=-0.5):
    """Richardson extrapolation of xi -> pair(f, phi)(xi) on a decreasing geometric grid."""
    xi = np.asarray(xi, dtype=float)
    if len(xi) < 10:
        raise FitError("association needs at least 10 xi values")
    if np.any(np.diff(xi) >= 0):
        raise FitError("xi grid must be strictly decreasing")
    ratios = xi[:-1] / xi[1:]
    if np.ptp(ratios) > 1e-9 * ratios.mean():
        raise FitError("xi grid must be geometric")
    P = pair(f, phi).func(xi.astype(complex))
    absP = np.abs(P)
    slope = tail_slope(xi, absP, tail=max(4, len(xi) // 2))
    if slope <= divergence_slope:
        order = -slope if math.isfinite(slope) else math.inf
        return Association(True, None, order, None, False, xi, P)
    wins = richardson_windows(xi, P)
    last = wins[-3:]
    Ls = np.array([w[1] for w in last], dtype=complex)
    ps = np.array([w[2] for w in last], dtype=float)
    if np.any(~np.isfinite(Ls)):
        return Association(False, complex(P[-1]), None, math.inf, True, xi, P,
                           tuple((a, complex(b).real, c) for a, b, c in wins))
    L = complex(Ls[-1])
    spread = float(np.max(np.abs(Ls - L)))
    conf = spread / max(abs(L), 1.0)
    order = float(ps[-1]) if math.isfinite(ps[-1]) else None
    low = bool(conf > tol or (order is not None and order <= 0))
    return Association(False, L, order, conf, low, xi, P,
                       tuple((a, complex(b).real, c) for a, b, c in wins))
