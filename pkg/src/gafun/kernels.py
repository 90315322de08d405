"""Cauchy (Poisson) mollifier and convolutions of real densities with it.

For a real density f the embedding is

    F^(m)(z, zeta) = m!/(2*pi*i) * int f(lam) [(lam - a+)^-(m+1) - (lam - a-)^-(m+1)] dlam,

with a+- = z +- i*zeta. For m = 0 the bracket equals the Poisson kernel
(1/pi) * zeta / ((lam - z)^2 + zeta^2), and raising m differentiates in z.
Piecewise-linear densities are integrated in closed form; other densities use
adaptive quadrature with breakpoints at the kernel peaks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gamma

from .errors import PoleError, EvaluationError
from .quadrature import integrate, peak_points


class KernelPoleError(PoleError):
    """(lam - z)/zeta = +-i for some lam in the support."""


@dataclass(frozen=True)
class MollifierSpec:
    """rho(w) = c_s / (1 + w^2)^s on the real line (k = 1)."""

    s: int = 1
    k: int = 1

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"kernel power must be a positive integer, got {self.s}")
        if self.k != 1:
            raise NotImplementedError("only k = 1 mollifiers are supported")

    @property
    def normalization(self):
        s = self.s
        return float(gamma(s) / (math.sqrt(math.pi) * gamma(s - 0.5)))

    def to_dict(self):
        return {"s": self.s, "k": self.k, "normalization": self.normalization}


def mollifier_value(z, zeta, spec=MollifierSpec()):
    """(1/zeta) * rho(z/zeta)."""
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    with np.errstate(all="ignore"):
        w = z / zeta
        den = 1.0 + w * w
    bad = np.atleast_1d((den == 0) | (zeta == 0))
    if bad.any():
        raise KernelPoleError("mollifier pole: z/zeta = +-i", int(np.flatnonzero(bad)[0]))
    return spec.normalization / zeta / den ** spec.s


def kernel(lam, z, zeta, order=0):
    """z-derivative of order ``order`` of (1/zeta) rho((z - lam)/zeta), s = 1."""
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    if order == 0:
        d = lam - z
        return zeta / (math.pi * (d * d + zeta * zeta))
    p = order + 1
    c = math.factorial(order) / (2j * math.pi)
    return c * ((lam - (z + 1j * zeta)) ** (-p) - (lam - (z - 1j * zeta)) ** (-p))


def kernel_margin(z, zeta, lo, hi):
    """min over lam in [lo, hi] of the distance from (lam - z)/zeta to {i, -i}.

    |1 + w^2| >= margin^2 whenever this returns ``margin``.
    """
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    out = np.full(np.broadcast(z, zeta).shape, np.inf)
    for target in (1j, -1j):
        # lam = z + zeta*target is the pole; distance along lam is measured in w
        pole = z + zeta * target
        lo_c = max(lo, -1e300)
        hi_c = min(hi, 1e300)
        px = np.clip(pole.real, lo_c, hi_c)
        d = np.abs(px - pole) / np.abs(zeta)
        out = np.minimum(out, d)
    return out


class Density:
    """Interface for objects that can be convolved with the mollifier."""

    label = "density"

    def convolve(self, z, zeta, order=0):
        raise NotImplementedError

    def convolve_mp(self, z, zeta, order=0):
        raise NotImplementedError

    def features(self):
        return np.array([])

    def support(self):
        raise NotImplementedError


class PiecewiseLinearDensity(Density):
    """Density given by segments (l0, l1, f0, f1), linear on each, zero elsewhere.

    A segment may extend to -inf or +inf; it must then be constant.
    """

    def __init__(self, segments, label="pwl"):
        segs = []
        for l0, l1, f0, f1 in segments:
            l0, l1, f0, f1 = float(l0), float(l1), float(f0), float(f1)
            if not l0 < l1:
                raise ValueError(f"segment [{l0}, {l1}] is empty")
            if (math.isinf(l0) or math.isinf(l1)) and f0 != f1:
                raise ValueError("unbounded segments must carry a constant value")
            if f0 == 0 and f1 == 0:
                continue
            segs.append((l0, l1, f0, f1))
        segs.sort()
        for (a0, a1, _, _), (b0, _, _, _) in zip(segs, segs[1:]):
            if b0 < a1:
                raise ValueError("segments overlap")
        self.segments = tuple(segs)
        self.label = label
        arr = np.array(segs, dtype=float).reshape(-1, 4)
        fin = np.isfinite(arr[:, 0]) & np.isfinite(arr[:, 1])
        self._fin = arr[fin]
        self._inf = arr[~fin]

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_table(cls, lam, values, label="table"):
        """Linear interpolation of the samples; zero outside [lam[0], lam[-1]]."""
        lam = np.asarray(lam, dtype=float)
        values = np.asarray(values, dtype=float)
        if lam.ndim != 1 or lam.shape != values.shape or len(lam) < 2:
            raise ValueError("table needs matching 1-d arrays with at least 2 rows")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("table abscissae must be strictly increasing")
        segs = [(lam[i], lam[i + 1], values[i], values[i + 1]) for i in range(len(lam) - 1)]
        return cls(segs, label)

    @classmethod
    def constant(cls, c, lo=-math.inf, hi=math.inf, label=None):
        return cls([(lo, hi, c, c)], label or f"const({c:g})")

    @classmethod
    def triangle(cls, center=0.0, half_width=1.0, height=None, label="triangle"):
        """Hat function; unit mass unless ``height`` is given."""
        h = 1.0 / half_width if height is None else height
        return cls([(center - half_width, center, 0.0, h), (center, center + half_width, h, 0.0)],
                   label)

    # -- pointwise data ----------------------------------------------------

    def value(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape)
        for l0, l1, f0, f1 in self.segments:
            m = (lam >= l0) & (lam < l1)
            if f0 == f1:
                out[m] = f0
            else:
                t = (lam[m] - l0) / (l1 - l0)
                out[m] = f0 + t * (f1 - f0)
        return out

    __call__ = value

    def _linear_on(self, lo, hi):
        """(left value, right value) of the linear piece covering (lo, hi)."""
        mid = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (
            hi - 1.0 if math.isfinite(hi) else (lo + 1.0 if math.isfinite(lo) else 0.0))
        for l0, l1, f0, f1 in self.segments:
            if l0 <= mid < l1:
                if f0 == f1:
                    return f0, f1
                slope = (f1 - f0) / (l1 - l0)
                return f0 + slope * (lo - l0), f0 + slope * (hi - l0)
        return 0.0, 0.0

    def features(self):
        pts = {p for s in self.segments for p in s[:2] if math.isfinite(p)}
        return np.array(sorted(pts))

    def support(self):
        if not self.segments:
            return (0.0, 0.0)
        return (self.segments[0][0], max(s[1] for s in self.segments))

    def is_compact(self):
        lo, hi = self.support()
        return math.isfinite(lo) and math.isfinite(hi)

    def integral(self):
        if not self.is_compact():
            raise ValueError("integral of a density without compact support")
        return float(sum(0.5 * (f0 + f1) * (l1 - l0) for l0, l1, f0, f1 in self.segments))

    def l1_norm(self):
        total = 0.0
        for l0, l1, f0, f1 in self.segments:
            if math.isinf(l1 - l0):
                return math.inf
            if f0 * f1 >= 0:
                total += 0.5 * (abs(f0) + abs(f1)) * (l1 - l0)
            else:
                # sign change inside the segment: two triangles
                t = abs(f0) / (abs(f0) + abs(f1))
                total += 0.5 * (abs(f0) * t + abs(f1) * (1 - t)) * (l1 - l0)
        return total

    def sup_abs(self):
        return max((max(abs(f0), abs(f1)) for _, _, f0, f1 in self.segments), default=0.0)

    # -- algebra -----------------------------------------------------------

    @staticmethod
    def lincomb(terms, label=None):
        """sum c_j * d_j for piecewise-linear densities d_j (exact)."""
        cuts = set()
        for _, d in terms:
            for l0, l1, _, _ in d.segments:
                cuts.update((l0, l1))
        cuts = sorted(cuts)
        segs = []
        for lo, hi in zip(cuts, cuts[1:]):
            v0 = v1 = 0.0
            for c, d in terms:
                a, b = d._linear_on(lo, hi)
                v0 += c * a
                v1 += c * b
            segs.append((lo, hi, v0, v1))
        name = label or " + ".join(f"{c:g}*{d.label}" for c, d in terms)
        return PiecewiseLinearDensity(segs, name)

    def shifted(self, c, label=None):
        """self - c on the whole line (c constant)."""
        return PiecewiseLinearDensity.lincomb(
            [(1.0, self), (-1.0, PiecewiseLinearDensity.constant(c))], label or f"{self.label}-{c:g}")

    # -- convolution -------------------------------------------------------

    def _check_poles(self, a):
        on_axis = a.imag == 0
        if not on_axis.any():
            return
        for l0, l1, _, _ in self.segments:
            hit = on_axis & (a.real >= l0) & (a.real <= l1)
            if hit.any():
                raise KernelPoleError("kernel pole on the integration path: (lam - z)/zeta = +-i",
                                      int(np.flatnonzero(hit)[0]))

    def convolve(self, z, zeta, order=0):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        z, zeta = np.broadcast_arrays(z, zeta)
        if np.any(zeta == 0):
            raise KernelPoleError("zeta = 0", int(np.flatnonzero(zeta == 0)[0]))
        ap = z + 1j * zeta
        am = z - 1j * zeta
        self._check_poles(ap)
        self._check_poles(am)
        p = order + 1
        with np.errstate(all="ignore"):
            acc = self._finite_part(ap, p) - self._finite_part(am, p)
            acc = acc + self._infinite_part(ap, am, p)
        out = math.factorial(order) / (2j * math.pi) * acc
        bad = ~np.isfinite(out)
        if bad.any():
            raise EvaluationError("non-finite convolution value", int(np.flatnonzero(bad)[0]))
        return out

    def _finite_part(self, a, p):
        """sum over finite segments of int f(lam) (lam - a)^-p dlam."""
        if len(self._fin) == 0:
            return np.zeros(a.shape, dtype=complex)
        l0, l1, f0, f1 = (self._fin[:, j][None, :] for j in range(4))
        a = a[:, None]
        s = (f1 - f0) / (l1 - l0)
        w0, w1 = l0 - a, l1 - a
        A = f0 + s * (a - l0)
        return np.sum(A * _jint(w0, w1, p) + s * _jint(w0, w1, p - 1), axis=1)

    def _infinite_part(self, ap, am, p):
        out = np.zeros(ap.shape, dtype=complex)
        for l0, l1, c, _ in self._inf:
            if math.isinf(l0) and math.isinf(l1):
                if p == 1:
                    out += c * 1j * math.pi * (np.sign(ap.imag) - np.sign(am.imag))
                continue
            if p >= 2:
                if math.isinf(l1):
                    out += c * ((l0 - ap) ** (1 - p) - (l0 - am) ** (1 - p)) / (p - 1)
                else:
                    out += c * ((l1 - ap) ** (1 - p) - (l1 - am) ** (1 - p)) / (1 - p)
                continue
            if math.isinf(l1):
                out += c * (-np.log(l0 - ap) + np.log(l0 - am))
            else:
                out += c * (_left_log(l1, ap) - _left_log(l1, am))
        return out

    def convolve_mp(self, z, zeta, order=0):
        z, zeta = mpmath.mpc(z), mpmath.mpc(zeta)
        ap, am = z + 1j * zeta, z - 1j * zeta
        p = order + 1
        acc = mpmath.mpc(0)
        for l0, l1, f0, f1 in self.segments:
            if math.isinf(l0) or math.isinf(l1):
                c = mpmath.mpf(f0)
                if math.isinf(l0) and math.isinf(l1):
                    if p == 1:
                        acc += c * 1j * mpmath.pi * (mpmath.sign(ap.imag) - mpmath.sign(am.imag))
                elif p >= 2:
                    lk = mpmath.mpf(l0 if math.isinf(l1) else l1)
                    sgn = 1 if math.isinf(l1) else -1
                    acc += sgn * c * ((lk - ap) ** (1 - p) - (lk - am) ** (1 - p)) / (p - 1)
                elif math.isinf(l1):
                    acc += c * (-mpmath.log(l0 - ap) + mpmath.log(l0 - am))
                else:
                    acc += c * (_left_log_mp(l1, ap) - _left_log_mp(l1, am))
                continue
            l0m, l1m, f0m, f1m = map(mpmath.mpf, (l0, l1, f0, f1))
            s = (f1m - f0m) / (l1m - l0m)
            for a, sign in ((ap, 1), (am, -1)):
                if a.imag == 0 and l0m <= a.real <= l1m:
                    raise KernelPoleError("kernel pole on the integration path", 0)
                w0, w1 = l0m - a, l1m - a
                A = f0m + s * (a - l0m)
                acc += sign * (A * _jint_mp(w0, w1, p) + s * _jint_mp(w0, w1, p - 1))
        return mpmath.factorial(order) / (2j * mpmath.pi) * acc


def _jint(w0, w1, q):
    """int_{w0}^{w1} w^-q dw along the straight segment (which avoids 0)."""
    if q == 0:
        return w1 - w0
    if q == 1:
        # the segment is horizontal and misses 0, so the ratio log is exact
        return np.log(w1 / w0)
    return (w1 ** (1 - q) - w0 ** (1 - q)) / (1 - q)


def _jint_mp(w0, w1, q):
    if q == 0:
        return w1 - w0
    if q == 1:
        return mpmath.log(w1 / w0)
    return (w1 ** (1 - q) - w0 ** (1 - q)) / (1 - q)


def _left_log(l1, a):
    """Regularized int_{-inf}^{l1} dlam/(lam - a), dropping the common log|R|."""
    w = l1 - a
    arg_inf = np.copysign(np.pi, -a.imag)
    darg = np.where(a.imag == 0, 0.0, np.angle(w) - arg_inf)
    return np.log(np.abs(w)) + 1j * darg


def _left_log_mp(l1, a):
    w = l1 - a
    if a.imag == 0:
        return mpmath.log(abs(w))
    arg_inf = mpmath.pi if a.imag < 0 else -mpmath.pi
    return mpmath.log(abs(w)) + 1j * (mpmath.arg(w) - arg_inf)


class CallableDensity(Density):
    """Density given by a vectorized callable on a compact support [lo, hi]."""

    def __init__(self, func, lo, hi, label="callable", breakpoints=(), abs_tol=1e-10,
                 rel_tol=1e-10):
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("callable densities need a finite support interval")
        self.func = func
        self.lo, self.hi = float(lo), float(hi)
        self.label = label
        self.breakpoints = np.array(sorted(float(b) for b in breakpoints if lo < b < hi))
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self.last_error = 0.0

    def value(self, lam):
        lam = np.asarray(lam, dtype=float)
        inside = (lam >= self.lo) & (lam <= self.hi)
        out = np.zeros(lam.shape)
        out[inside] = np.asarray(self.func(lam[inside]), dtype=float)
        return out

    __call__ = value

    def features(self):
        return np.concatenate([[self.lo], self.breakpoints, [self.hi]])

    def support(self):
        return (self.lo, self.hi)

    def is_compact(self):
        return True

    def _points(self, z, zeta):
        ap, am = z + 1j * zeta, z - 1j * zeta
        return np.concatenate([
            self.breakpoints,
            peak_points([ap.real, am.real], [abs(ap.imag), abs(am.imag)], self.lo, self.hi)])

    def integral(self):
        return integrate(self.func, self.lo, self.hi, self.breakpoints, self.abs_tol).value.real

    def l1_norm(self):
        return integrate(lambda t: np.abs(self.func(t)), self.lo, self.hi, self.breakpoints,
                         self.abs_tol).value.real

    def convolve(self, z, zeta, order=0):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        z, zeta = np.broadcast_arrays(z, zeta)
        out = np.empty(z.shape, dtype=complex)
        worst = 0.0
        for i, (zi, ci) in enumerate(zip(z.ravel(), zeta.ravel())):
            for a in (zi + 1j * ci, zi - 1j * ci):
                if a.imag == 0 and self.lo <= a.real <= self.hi:
                    raise KernelPoleError("kernel pole on the integration path", i)
            res = integrate(lambda t: self.func(t) * kernel(t, zi, ci, order), self.lo, self.hi,
                            self._points(zi, ci), self.abs_tol, self.rel_tol)
            out.flat[i] = res.value
            worst = max(worst, res.error)
        self.last_error = worst
        return out

    def convolve_mp(self, z, zeta, order=0):
        z, zeta = mpmath.mpc(z), mpmath.mpc(zeta)
        ap, am = z + 1j * zeta, z - 1j * zeta
        p = order + 1
        c = mpmath.factorial(order) / (2j * mpmath.pi)

        def g(t):
            return mpmath.mpf(float(self.func(np.array([float(t)]))[0])) * c * (
                (t - ap) ** (-p) - (t - am) ** (-p))

        cuts = sorted({self.lo, self.hi, *self.breakpoints.tolist(),
                       *peak_points([float(ap.real), float(am.real)],
                                    [abs(float(ap.imag)), abs(float(am.imag))],
                                    self.lo, self.hi).tolist()})
        return mpmath.quad(g, cuts)
