"""The concentration functions h and K, the inverse of h, and the calculus around them.

``h(r) = r^{-2}||A|| + int (1 ^ |z|^2/r^2) N(dz)`` and
``K(r) = r^{-2}||A|| + r^{-2} int_{|z|<r} |z|^2 N(dz)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BracketFailure, QuadratureFailure, ScalingWindowInvalid
from .measure import effective_drift

BRACKET_FACTOR = 4.0
BRACKET_STEPS = 40
INVERSE_RTOL = 1e-10
LOG_R_MAX = 340.0


def audit_lattice(n_random=64, seed=0, lo=-20, hi=20):
    """Dyadic radii 2^lo..2^hi plus log-uniform random points, sorted."""
    rng = np.random.default_rng(seed)
    dyadic = 2.0 ** np.arange(lo, hi + 1)
    extra = 2.0 ** rng.uniform(lo, hi, n_random)
    return np.sort(np.concatenate([dyadic, extra]))


AUDIT_LATTICE = audit_lattice()


class ConcentrationFn:
    """h, K and h^{-1} of a triplet.

    The bracket table ``h(4^k)``, k = -40..40, is computed at construction so
    that instances are read-only afterwards.
    """

    def __init__(self, triplet):
        self.triplet = triplet
        self.norm_A = triplet.A.norm
        self.N = triplet.N
        ks = np.arange(-BRACKET_STEPS, BRACKET_STEPS + 1)
        self._bracket_r = BRACKET_FACTOR ** ks.astype(float)
        self._bracket_h = np.array([self._h1(r) for r in self._bracket_r])

    # -- evaluators ------------------------------------------------------------
    def _h1(self, r):
        return self.norm_A / r**2 + self.N.tail_mass(r) + self.N.truncated_second_moment(r) / r**2

    def _k1(self, r):
        return (self.norm_A + self.N.truncated_second_moment(r)) / r**2

    def h(self, r):
        """h(r) by the definition (scalar or array)."""
        if np.ndim(r) == 0:
            if not r > 0:
                raise ValueError("r must be positive")
            return self._h1(float(r))
        return np.array([self.h(x) for x in np.asarray(r, float).ravel()]).reshape(np.shape(r))

    def K(self, r):
        if np.ndim(r) == 0:
            if not r > 0:
                raise ValueError("r must be positive")
            return self._k1(float(r))
        return np.array([self.K(x) for x in np.asarray(r, float).ravel()]).reshape(np.shape(r))

    def h_tail_integral(self, r):
        """Second evaluator: r^{-2}||A|| + r^{-2} int_0^r 2 s N(B_s^c) ds."""
        r = float(r)
        tail = self.N.tail_mass

        def g(t):
            s = np.exp(t)
            return 2.0 * s * s * tail(s)

        lo = np.log(r) - 60.0
        val, err = integrate.quad(g, lo, np.log(r), epsabs=0.0, epsrel=1e-10, limit=400,
                                  points=[np.log(r) - k for k in (1, 3, 8, 20)])
        if not np.isfinite(val):
            raise QuadratureFailure("tail integral for h is not finite", achieved=err)
        return (self.norm_A + val) / r**2

    def inverse(self, u):
        """h^{-1}(u): bracket from r = 1 by factors of 4, then bisection in log r."""
        if np.ndim(u) != 0:
            return np.array([self.inverse(x) for x in np.asarray(u, float).ravel()]).reshape(np.shape(u))
        u = float(u)
        if not u > 0:
            raise ValueError("u must be positive")
        k0 = BRACKET_STEPS  # index of r = 1
        hr = self._bracket_h
        if u <= hr[-1] or u >= hr[0]:
            raise BracketFailure(f"u = {u:g} outside the bracket range [{hr[-1]:.3g}, {hr[0]:.3g}]")
        # grow the bracket from r = 1 outward
        if hr[k0] >= u:
            j = k0
            while hr[j] >= u:
                j += 1
            lo, hi = self._bracket_r[j - 1], self._bracket_r[j]
        else:
            j = k0
            while hr[j] < u:
                j -= 1
            lo, hi = self._bracket_r[j], self._bracket_r[j + 1]
        a, b = np.log(lo), np.log(hi)
        while b - a > INVERSE_RTOL:
            m = 0.5 * (a + b)
            if self._h1(np.exp(m)) >= u:
                a = m
            else:
                b = m
        return float(np.exp(0.5 * (a + b)))

    # -- calculus --------------------------------------------------------------
    def calculus_residual(self, a, b):
        """h(b) - h(a) + int_a^b 2K(r)/r dr (b may be inf)."""
        if not 0 < a < b:
            raise ValueError("need 0 < a < b")
        hb = 0.0 if not np.isfinite(b) else self._h1(b)
        ta = np.log(a)
        # beyond r = e^340 the square r^2 overflows; K is negligible there for every zoo member
        tb = min(np.log(b), LOG_R_MAX) if np.isfinite(b) else LOG_R_MAX
        span = tb - ta
        edges = np.unique(np.concatenate([ta + span * np.linspace(0.0, 1.0, 6),
                                          [x for x in ta + np.array([4.0, 16.0, 64.0, 256.0]) if x < tb]]))
        val = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            part, _ = integrate.quad(lambda t: 2.0 * self._k1(np.exp(t)), lo, hi, epsabs=0.0,
                                     epsrel=1e-11, limit=400)
            val += part
        return hb - self._h1(a) + val

    def small_jump_first_moment(self, eps):
        """int_{eps <= |z| < 1} |z| N(dz); diverges as eps -> 0 when alpha_h >= 1 and A = 0."""
        return self.N.annulus_first_moment(eps, 1.0)


def h_eval(c, r):
    return c.h(r)


def K_eval(c, r):
    return c.K(r)


def h_inverse(c, u):
    return c.inverse(u)


def calculus_identity_check(c, a, b):
    return c.calculus_residual(a, b)


@dataclass
class DriftBound:
    r: float
    cor_lhs: float
    cor_rhs: float
    cor_constant: float
    annulus_lhs: float
    annulus_rhs: float
    empirical: bool = True


def drift_deviation_bound(c, r, scaling, lattice=None):
    """Drift deviation |b_r - b| against c/(theta ^ 1) max(r, r^2) h(r).

    The constant c is fitted as the largest observed ratio over the lattice
    radii below theta and is flagged as empirical.  Also returns the annulus
    bound int_{r <= |z| < theta} |z| N <= 2C/(alpha-1) r h(r).
    """
    alpha, C, theta = scaling.alpha, scaling.constant, scaling.theta
    if not alpha > 1:
        raise ScalingWindowInvalid(f"the drift bound needs alpha > 1, got {alpha:g}")
    if not 0 < r < theta:
        raise ScalingWindowInvalid(f"r = {r:g} must lie in (0, theta = {theta:g})")
    t = c.triplet
    b_vec = np.array(t.b, float)
    theta1 = min(theta, 1.0)

    def env(x):
        return max(x, x * x) * c.h(x) / theta1

    def lhs(x):
        return float(np.linalg.norm(effective_drift(t, x) - b_vec))

    lat = AUDIT_LATTICE if lattice is None else np.asarray(lattice)
    lat = lat[lat < theta]
    ratios = [lhs(x) / env(x) for x in lat] + [lhs(r) / env(r)]
    const = max(max(ratios), 0.0)
    ann = t.N.annulus_first_moment(r, theta)
    return DriftBound(r=float(r), cor_lhs=lhs(r), cor_rhs=const * env(r), cor_constant=const,
                      annulus_lhs=float(ann), annulus_rhs=2.0 * C / (alpha - 1.0) * r * c.h(r))
