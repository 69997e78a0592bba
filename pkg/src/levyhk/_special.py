"""Constants, direction grids and power-law oscillatory kernels.

The kernels evaluate, for a fixed exponent ``alpha``, truncated integrals such as

    G(X) = int_0^X (1 - cos u) u^{-1-alpha} du

for whole arrays of ``X`` at once.  They are what makes exponents of
restricted power-law measures cheap enough to feed into FFT grids.  Small
``X`` uses the Taylor series, moderate ``X`` a cumulative Gauss-Legendre
table on unit panels, and large ``X`` the asymptotic expansion of
``int_X^inf e^{iu} u^{-beta} du``.
"""

from functools import lru_cache

import numpy as np
from scipy import special

_X_SERIES = 1.0
_X_TABLE = 25.0
_N_SERIES = 30
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def sphere_area(d):
    """Surface area omega_d = 2 pi^{d/2} / Gamma(d/2) of the unit sphere in R^d."""
    return 2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0)


def stable_constant(d, alpha):
    """Density constant of the isotropic alpha-stable Levy measure.

    With ``N(dz) = stable_constant(d, alpha) |z|^{-d-alpha} dz`` the real part
    of the exponent is exactly ``|x|^alpha``.
    """
    return (2.0**alpha * special.gamma((d + alpha) / 2.0)
            / (np.pi ** (d / 2.0) * abs(special.gamma(-alpha / 2.0))))


def abs_cosine_moment(d, alpha):
    """E|<v, xi>|^alpha for xi uniform on the unit sphere of R^d and unit v."""
    return (special.gamma(d / 2.0) * special.gamma((alpha + 1.0) / 2.0)
            / (np.sqrt(np.pi) * special.gamma((d + alpha) / 2.0)))


@lru_cache(maxsize=None)
def cosine_law_rule(d, n=64):
    """Quadrature nodes/weights for u = <v, xi>, xi uniform on S^{d-1}.

    Returns points in [-1, 1] and probability weights summing to one.
    """
    if d == 1:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    a = (d - 3) / 2.0
    u, w = special.roots_jacobi(n, a, a)
    return u, w / w.sum()


def direction_grid(d, n):
    """Deterministic unit vectors covering the sphere.

    d=1 gives the two signs, d=2 an equi-angular circle, d=3 a Fibonacci
    sphere, higher d a scrambled-free Sobol sample pushed through the
    Gaussian quantile.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        phi = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if d == 3:
        k = np.arange(n) + 0.5
        z = 1.0 - 2.0 * k / n
        rho = np.sqrt(1.0 - z * z)
        phi = np.pi * (1.0 + 5**0.5) * k
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    from scipy.stats import qmc

    pts = qmc.Sobol(d, scramble=False).random(n + 1)[1:]
    g = special.ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_average_cos(d, u):
    """Lambda_d(u): average of cos(u <e, xi>) over xi uniform on S^{d-1}."""
    u = np.asarray(u, dtype=float)
    if d in (1, 3):
        with np.errstate(invalid="ignore"):
            out = np.cos(u) if d == 1 else np.sinc(u / np.pi)
        # the oscillation averages out against any integrable weight
        return np.where(np.isinf(u), 0.0, out)
    nu = d / 2.0 - 1.0
    out = np.ones_like(u)
    au = np.abs(u)
    out[np.isinf(au)] = 0.0
    # below 1e-8 the value is 1 to double precision
    nz = (au > 1e-8) & np.isfinite(au)
    out[nz] = special.gamma(d / 2.0) * (2.0 / au[nz]) ** nu * special.jv(nu, au[nz])
    return out


def _fourier_tail(X, beta):
    """Asymptotic expansion of int_X^inf e^{iu} u^{-beta} du for large X."""
    X = np.asarray(X, dtype=float)
    term = 1j * X ** (-beta)
    total = term.copy()
    for k in range(60):
        nxt = term * (-1j) * (beta + k) / X
        if np.all(np.abs(nxt) < 1e-19 * np.maximum(np.abs(total), 1e-300)):
            break
        if np.any(np.abs(nxt) > np.abs(term)):
            break
        total = total + nxt
        term = nxt
    return np.exp(1j * X) * total


def _hankel_coeffs(nu, m):
    out = [1.0]
    for k in range(1, m):
        out.append(out[-1] * (4 * nu * nu - (2 * k - 1) ** 2) / (k * 8.0))
    return out


class PowerKernel:
    """Truncated oscillatory integrals for a power-law radial profile.

    kind ``"cos"`` integrates ``(1 - Lambda_d(u)) u^{-1-alpha}``; kind
    ``"sin"`` (one dimension only) integrates the odd part, compensated so the
    integral converges at zero:

    * alpha < 1: ``sin u``;
    * alpha > 1: ``sin u - u``;
    * alpha = 1: ``sin u - u 1{u<1}``.

    ``kernel(X)`` returns the integral over ``[0, X]`` and accepts ``inf``.
    """

    def __init__(self, alpha, kind="cos", dim=1):
        if not 0.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if kind == "sin" and dim != 1:
            raise ValueError("the odd kernel is one-dimensional")
        self.alpha = float(alpha)
        self.kind = kind
        self.dim = int(dim)
        self.limit = self._limit()
        self._table = self._build_table()

    # integrand on u >= 1 (used by the table); vectorised
    def _integrand(self, u):
        a = self.alpha
        if self.kind == "cos":
            return (1.0 - sphere_average_cos(self.dim, u)) * u ** (-1.0 - a)
        if a > 1.0:
            return (np.sin(u) - u) * u ** (-1.0 - a)
        return np.sin(u) * u ** (-1.0 - a)

    def _limit(self):
        a = self.alpha
        if self.kind == "cos":
            return 1.0 / (sphere_area(self.dim) * stable_constant(self.dim, a))
        if a == 1.0:
            return 1.0 - np.euler_gamma
        return -special.gamma(-a) * np.sin(np.pi * a / 2.0)

    def _series(self, X):
        a = self.alpha
        out = np.zeros_like(X)
        if self.kind == "cos":
            d = self.dim
            for k in range(1, _N_SERIES):
                ck = special.gamma(d / 2.0) / (4.0**k * special.factorial(k) * special.gamma(k + d / 2.0))
                out += (-1) ** (k + 1) * ck * X ** (2 * k - a) / (2 * k - a)
            return out
        start = 0 if a < 1.0 else 1
        for k in range(start, _N_SERIES):
            p = 2 * k + 1 - a
            out += (-1) ** k * X**p / (special.factorial(2 * k + 1) * p)
        return out

    def _build_table(self):
        edges = np.arange(_X_SERIES, _X_TABLE + 1.0)
        vals = [float(self._series(np.array([_X_SERIES]))[0])]
        for lo in edges[:-1]:
            u = lo + 0.5 * (_GL_NODES + 1.0)
            vals.append(vals[-1] + 0.5 * np.dot(_GL_WEIGHTS, self._integrand(u)))
        return edges, np.array(vals)

    def _tail(self, X):
        """int_X^inf of the integrand, for X beyond the table."""
        a = self.alpha
        if self.kind == "sin":
            t = np.imag(_fourier_tail(X, 1.0 + a))
            if a > 1.0:
                t = t - X ** (1.0 - a) / (a - 1.0)
            return t
        if self.dim == 1:
            return X ** (-a) / a - np.real(_fourier_tail(X, 1.0 + a))
        nu = self.dim / 2.0 - 1.0
        phi = nu * np.pi / 2.0 + np.pi / 4.0
        acc = np.zeros(np.shape(X), dtype=complex)
        for m, am in enumerate(_hankel_coeffs(nu, 10)):
            acc += (1j**m) * am * _fourier_tail(X, 1.0 + a + nu + 0.5 + m)
        lam_tail = special.gamma(self.dim / 2.0) * 2.0**nu * np.sqrt(2.0 / np.pi) * np.real(np.exp(-1j * phi) * acc)
        return X ** (-a) / a - lam_tail

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty_like(X)
        flat_x = X.ravel()
        flat = out.ravel()
        small = flat_x < _X_SERIES
        big = flat_x > _X_TABLE
        mid = ~(small | big)
        if small.any():
            flat[small] = self._series(flat_x[small])
        if mid.any():
            xm = flat_x[mid]
            edges, vals = self._table
            j = np.minimum(np.floor(xm - _X_SERIES).astype(int), len(edges) - 1)
            lo = edges[j]
            width = xm - lo
            u = lo[:, None] + 0.5 * width[:, None] * (_GL_NODES[None, :] + 1.0)
            part = 0.5 * width * (self._integrand(u) @ _GL_WEIGHTS)
            flat[mid] = vals[j] + part
        if big.any():
            xb = flat_x[big]
            finite = np.isfinite(xb)
            vb = np.full(xb.shape, self.limit)
            if finite.any():
                vb[finite] = self.limit - self._tail(xb[finite])
            flat[big] = vb
        return flat.reshape(X.shape)


@lru_cache(maxsize=None)
def power_kernel(alpha, kind="cos", dim=1):
    return PowerKernel(alpha, kind, dim)
