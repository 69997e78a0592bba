"""One-dimensional radial profiles k(r) on (0, inf).

A profile is the density of a measure on the half-line.  Leaf measures in
:mod:`levyhk.measure` spread a profile along rays or uniformly over spheres.
The power family ``c r^{-1-alpha}`` has closed forms for everything; other
profiles fall back on adaptive quadrature.
"""

import warnings

import numpy as np
from scipy import integrate

from ._special import power_kernel
from .errors import QuadratureFailure

INF = np.inf
QUAD_RTOL = 1e-9


def _logquad(f, lo, hi, epsrel=QUAD_RTOL):
    """int_lo^hi f(r) dr computed in the variable log r (lo may be 0, hi inf)."""
    if not hi > lo:
        return 0.0
    tl = np.log(lo) if lo > 0 else -745.0
    th = np.log(hi) if np.isfinite(hi) else 709.0

    def g(t):
        r = np.exp(t)
        return f(r) * r

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, tl, th, epsabs=0.0, epsrel=epsrel, limit=400)
    if not np.isfinite(val):
        raise QuadratureFailure("non-finite radial integral", achieved=err)
    return val


def _oscquad(k, freq, lo, hi, weight):
    """int_lo^hi k(r) w(freq r) dr with w = cos or sin, lo > 0."""
    if not hi > lo:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if np.isfinite(hi):
            val, err = integrate.quad(k, lo, hi, weight=weight, wvar=freq, limit=400,
                                      epsabs=1e-14, epsrel=QUAD_RTOL)
        else:
            val, err = integrate.quad(k, lo, INF, weight=weight, wvar=freq, limlst=200,
                                      epsabs=1e-14)
    return val


class RadialProfile:
    """Base class: density k(r) on (0, inf) with quadrature-based functionals."""

    is_power = False

    def density(self, r):
        raise NotImplementedError

    # -- moments ---------------------------------------------------------
    def moment(self, p, lo, hi):
        """int_{lo <= r < hi} r^p k(r) dr."""
        return _logquad(lambda r: r**p * self.density(r), lo, hi)

    # -- oscillatory pieces of the exponent ------------------------------
    def cos_integral(self, a, lo, hi):
        """int_lo^hi (1 - cos(a r)) k(r) dr for an array of a >= 0."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        out = np.zeros_like(a)
        for i, ai in enumerate(a):
            if ai == 0.0 or not hi > lo:
                continue
            r0 = min(max(1.0 / ai, lo), hi)
            near = _logquad(lambda r: 2.0 * np.sin(0.5 * ai * r) ** 2 * self.density(r), lo, r0)
            far = 0.0
            if hi > r0:
                far = self.moment(0, r0, hi) - _oscquad(self.density, ai, r0, hi, "cos")
            out[i] = near + far
        return out

    def sin_integral(self, s, lo, hi, cut=1.0):
        """int_lo^hi (sin(s r) - s r 1{r < cut}) k(r) dr for an array of signed s."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros_like(s)
        for i, si in enumerate(s):
            ai = abs(si)
            if ai == 0.0 or not hi > lo:
                continue
            r0 = 1.0 / ai
            pts = sorted({lo, hi, min(max(r0, lo), hi), min(max(cut, lo), hi)})
            total = 0.0
            for u, w in zip(pts[:-1], pts[1:]):
                if not w > u:
                    continue
                comp = 1.0 if w <= cut else 0.0
                if w <= r0:
                    total += _logquad(lambda r: (np.sin(si * r) - comp * si * r) * self.density(r), u, w)
                else:
                    total += np.sign(si) * _oscquad(self.density, ai, u, w, "sin")
                    if comp:
                        total -= si * self.moment(1, u, w)
            out[i] = total
        return out

    # -- transforms ------------------------------------------------------
    def scaled(self, factor):
        """Profile of the image measure under r -> factor * r."""
        return ScaledProfile(self, factor)

    def sample(self, rng, n, lo, hi):
        """Draw n radii from k restricted to [lo, hi), lo > 0, by a tabulated inverse CDF."""
        top = hi if np.isfinite(hi) else lo * 1e12
        grid = np.geomspace(lo, top, 4097)
        pieces = [self.moment(0, u, w) for u, w in zip(grid[:-1], grid[1:])]
        cdf = np.concatenate([[0.0], np.cumsum(pieces)])
        cdf /= cdf[-1]
        u = rng.random(n)
        return np.exp(np.interp(u, cdf, np.log(grid)))

    def to_dict(self):
        raise NotImplementedError(f"{type(self).__name__} is not serialisable")


class PowerProfile(RadialProfile):
    """k(r) = c r^{-1-alpha}, alpha in (0, 2)."""

    is_power = True

    def __init__(self, c, alpha):
        if not c >= 0:
            raise ValueError("profile constant must be non-negative")
        if not 0.0 < alpha < 2.0:
            raise ValueError("profile exponent must lie in (0, 2)")
        self.c = float(c)
        self.alpha = float(alpha)

    def __repr__(self):
        return f"PowerProfile(c={self.c!r}, alpha={self.alpha!r})"

    def density(self, r):
        return self.c * np.asarray(r, dtype=float) ** (-1.0 - self.alpha)

    def moment(self, p, lo, hi):
        if not hi > lo or self.c == 0.0:
            return 0.0
        q = p - self.alpha
        if q == 0.0:
            return INF if lo == 0 or not np.isfinite(hi) else self.c * np.log(hi / lo)
        if q > 0:
            if not np.isfinite(hi):
                return INF
            return self.c * (hi**q - lo**q) / q
        if lo == 0:
            return INF
        top = 0.0 if not np.isfinite(hi) else hi**q
        return self.c * (lo**q - top) / (-q)

    def cos_integral(self, a, lo, hi):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        out = np.zeros_like(a)
        if not hi > lo or self.c == 0.0:
            return out
        nz = a > 0
        an = a[nz]
        g = power_kernel(self.alpha, "cos", 1)
        upper = g(an * hi) if np.isfinite(hi) else g.limit
        lower = g(an * lo) if lo > 0 else 0.0
        out[nz] = self.c * an**self.alpha * (upper - lower)
        return out

    def sin_integral(self, s, lo, hi, cut=1.0):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros_like(s)
        if not hi > lo or self.c == 0.0:
            return out
        nz = s != 0
        sn = s[nz]
        an = np.abs(sn)
        al = self.alpha
        g = power_kernel(al, "sin", 1)
        upper = g(an * hi) if np.isfinite(hi) else g.limit
        lower = g(an * lo) if lo > 0 else 0.0
        val = np.sign(sn) * an**al * (upper - lower)
        if al < 1.0:
            if lo < cut:
                top = min(hi, cut)
                val -= sn * (top ** (1 - al) - lo ** (1 - al)) / (1 - al)
        elif al > 1.0:
            if hi > cut:
                bot = max(lo, cut)
                top = 0.0 if not np.isfinite(hi) else hi ** (1 - al)
                val += sn * (bot ** (1 - al) - top) / (al - 1)
        else:
            inv = 1.0 / an
            u1 = np.clip(np.minimum(inv, cut), lo, hi)
            u2 = np.clip(np.maximum(inv, cut), lo, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.where(u2 > u1, np.log(u2 / np.where(u1 > 0, u1, 1.0)), 0.0)
            val += sn * np.sign(inv - cut) * logs
        out[nz] = self.c * val
        return out

    def scaled(self, factor):
        return PowerProfile(self.c * factor**self.alpha, self.alpha)

    def sample(self, rng, n, lo, hi):
        al = self.alpha
        top = 0.0 if not np.isfinite(hi) else hi ** (-al)
        u = rng.random(n)
        return (lo ** (-al) - u * (lo ** (-al) - top)) ** (-1.0 / al)

    def to_dict(self):
        return {"kind": "power", "c": self.c, "alpha": self.alpha}


class TemperedProfile(RadialProfile):
    """k(r) = c r^{-1-alpha} exp(-beta r); exercised through the quadrature path."""

    def __init__(self, c, alpha, beta):
        if not (c >= 0 and beta > 0 and alpha < 2.0):
            raise ValueError("tempered profile needs c >= 0, beta > 0, alpha < 2")
        self.c, self.alpha, self.beta = float(c), float(alpha), float(beta)

    def __repr__(self):
        return f"TemperedProfile(c={self.c!r}, alpha={self.alpha!r}, beta={self.beta!r})"

    def density(self, r):
        r = np.asarray(r, dtype=float)
        # saturates instead of overflowing where r^{-1-alpha} exceeds e^700; the
        # integrands built on the density are negligible there
        with np.errstate(divide="ignore"):
            return self.c * np.exp(np.minimum(-(1.0 + self.alpha) * np.log(r) - self.beta * r, 700.0))

    def moment(self, p, lo, hi):
        e = p - 1.0 - self.alpha
        if lo == 0 and e <= -1.0:
            return INF if self.c > 0 and hi > 0 else 0.0
        return _logquad(lambda r: self.c * np.exp(e * np.log(r) - self.beta * r), lo, hi)

    def to_dict(self):
        return {"kind": "tempered", "c": self.c, "alpha": self.alpha, "beta": self.beta}


class ScaledProfile(RadialProfile):
    """Image of ``base`` under r -> factor * r."""

    def __init__(self, base, factor):
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        self.base = base
        self.factor = float(factor)

    def density(self, r):
        return self.base.density(np.asarray(r, dtype=float) / self.factor) / self.factor

    def moment(self, p, lo, hi):
        f = self.factor
        return f**p * self.base.moment(p, lo / f, hi / f)

    def cos_integral(self, a, lo, hi):
        f = self.factor
        return self.base.cos_integral(np.asarray(a) * f, lo / f, hi / f)

    def sin_integral(self, s, lo, hi, cut=1.0):
        f = self.factor
        return self.base.sin_integral(np.asarray(s) * f, lo / f, hi / f, cut / f)

    def scaled(self, factor):
        return ScaledProfile(self.base, self.factor * factor)

    def sample(self, rng, n, lo, hi):
        f = self.factor
        return f * self.base.sample(rng, n, lo / f, hi / f)

    def to_dict(self):
        return {"kind": "scaled", "factor": self.factor, "base": self.base.to_dict()}

