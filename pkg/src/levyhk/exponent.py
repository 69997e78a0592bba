"""Characteristic exponent psi, its real part, the radial majorant psi* and the
projected quadratic form.

Conventions: ``E exp(i<x, Y_t>) = exp(-t psi(x))`` with
``psi(x) = <x,Ax> - i<x,b> - int (e^{i<x,z>} - 1 - i<x,z> 1{|z|<1}) N(dz)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._special import direction_grid
from .errors import QuadratureFailure
from .measure import _as_points

PSI_STAR_DIRECTIONS = 1024
PSI_STAR_PER_OCTAVE = 16


class CharExponent:
    """The exponent of a generating triplet, evaluated on arrays of points."""

    def __init__(self, triplet, rtol=1e-8):
        self.triplet = triplet
        self.dim = triplet.dim
        self.rtol = rtol
        self._cache = {}

    # -- basic evaluations ---------------------------------------------------
    def re_psi(self, X):
        """<x,Ax> + int (1 - cos<x,z>) N(dz), one value per row of X."""
        X = _as_points(X, self.dim)
        val = self.triplet.A.quadratic(X) + self.triplet.N.re_integral(X)
        if not np.all(np.isfinite(val)):
            raise QuadratureFailure("real part of the exponent is not finite", achieved=np.nan)
        return np.maximum(val, 0.0)

    def im_psi(self, X):
        X = _as_points(X, self.dim)
        val = -(X @ self.triplet.b) - self.triplet.N.im_integral(X)
        if not np.all(np.isfinite(val)):
            raise QuadratureFailure("imaginary part of the exponent is not finite", achieved=np.nan)
        return val

    def psi(self, X):
        return self.re_psi(X) + 1j * self.im_psi(X)

    def char_function(self, X, t):
        """exp(-t psi(x))."""
        return np.exp(-t * self.psi(X))

    # -- psi* ------------------------------------------------------------------
    def psi_star(self, r, n_directions=None, ascent=True):
        """Sampled lower estimate of sup_{|z| <= r} Re psi(z); scalar or array input."""
        res = self.psi_star_report(np.atleast_1d(r), n_directions=n_directions, ascent=ascent)
        return res.values[0] if np.ndim(r) == 0 else res.values

    def psi_star_report(self, radii, n_directions=None, ascent=True):
        radii = np.asarray(radii, dtype=float)
        if np.any(radii <= 0):
            raise ValueError("radii must be positive")
        d = self.dim
        n_dir = 2 if d == 1 else (n_directions or PSI_STAR_DIRECTIONS)
        dirs = direction_grid(d, n_dir)
        order = np.argsort(radii)
        rs = radii[order]
        ratio = 2.0 ** (1.0 / PSI_STAR_PER_OCTAVE)
        lo = rs[0] / 64.0
        n = int(np.ceil(np.log(rs[-1] / lo) / np.log(ratio))) + 1
        grid = np.unique(np.concatenate([lo * ratio ** np.arange(n), rs]))
        grid = grid[grid <= rs[-1] * (1 + 1e-15)]
        best = np.empty(len(grid))
        arg = np.empty((len(grid), d))
        chunk = max(1, 200000 // len(dirs))
        for i0 in range(0, len(grid), chunk):
            g = grid[i0:i0 + chunk]
            pts = (g[:, None, None] * dirs[None, :, :]).reshape(-1, d)
            vals = self.re_psi(pts).reshape(len(g), len(dirs))
            j = np.argmax(vals, axis=1)
            best[i0:i0 + chunk] = vals[np.arange(len(g)), j]
            arg[i0:i0 + chunk] = g[:, None] * dirs[j]
        run = np.maximum.accumulate(best)
        idx_run = np.zeros(len(grid), dtype=int)
        cur = 0
        for i in range(len(grid)):
            if best[i] >= best[cur]:
                cur = i
            idx_run[i] = cur
        pos = np.searchsorted(grid, rs * (1 - 1e-15))
        pos = np.minimum(pos, len(grid) - 1)
        vals = run[pos]
        where = arg[idx_run[pos]].copy()
        if ascent and d >= 2:
            for k, r in enumerate(rs):
                v, x = self._ascend(where[k], r)
                if v > vals[k]:
                    vals[k], where[k] = v, x
            vals = np.maximum.accumulate(vals)
        out = np.empty_like(vals)
        out[order] = vals
        loc = np.empty_like(where)
        loc[order] = where
        return PsiStarResult(values=out, argmax=loc, n_directions=len(dirs), radial_ratio=ratio,
                             ascent=bool(ascent and d >= 2))

    def _ascend(self, x0, r):
        """Local ascent of Re psi on the sphere of radius |x0| <= r."""
        rho = float(np.linalg.norm(x0))
        if rho == 0:
            return 0.0, x0
        d = self.dim
        step = 2 * np.pi / PSI_STAR_DIRECTIONS if d == 2 else 4.0 / np.sqrt(PSI_STAR_DIRECTIONS)

        if d == 2:
            th0 = np.arctan2(x0[1], x0[0])

            def f(th):
                return -self.re_psi(rho * np.array([np.cos(th), np.sin(th)]))[0]

            res = optimize.minimize_scalar(f, bounds=(th0 - step, th0 + step), method="bounded",
                                           options={"xatol": 1e-10})
            th = res.x
            return -res.fun, rho * np.array([np.cos(th), np.sin(th)])

        u0 = x0 / rho

        def g(y):
            u = u0 + y
            u = u / np.linalg.norm(u)
            return -self.re_psi(rho * u)[0]

        res = optimize.minimize(g, np.zeros(d), method="Nelder-Mead",
                                options={"initial_simplex": np.vstack([np.zeros(d), step * np.eye(d)]),
                                         "xatol": 1e-9, "fatol": 1e-12, "maxiter": 200})
        u = u0 + res.x
        u /= np.linalg.norm(u)
        return -res.fun, rho * u

    # -- quadratic form of the projection ------------------------------------
    def quadratic_form_K1(self, X):
        """<x,Ax> + int_{|<x,z>|<1} <x,z>^2 N(dz) for each row x (x != 0)."""
        X = _as_points(X, self.dim)
        out = np.empty(len(X))
        for i, x in enumerate(X):
            s = np.linalg.norm(x)
            if s == 0:
                raise ValueError("x must be non-zero")
            out[i] = self.quadratic_form_along(x / s, np.array([s]))[0]
        return out

    def quadratic_form_along(self, v, s):
        """The quadratic form at the points s*v for a unit v and an array of s > 0."""
        v = np.asarray(v, dtype=float)
        key = ("proj", tuple(np.round(v, 15)))
        if key not in self._cache:
            self._cache[key] = (float(v @ self.triplet.A.entries @ v), self.triplet.N.pushforward(v))
        a1, n1 = self._cache[key]
        s = np.asarray(s, dtype=float)
        return np.array([si * si * (a1 + n1.truncated_second_moment(1.0 / si)) for si in s])


@dataclass
class PsiStarResult:
    values: np.ndarray
    argmax: np.ndarray
    n_directions: int
    radial_ratio: float
    ascent: bool
    notes: list = field(default_factory=lambda: ["sampled lower estimate of the supremum"])


def re_psi(e, x):
    return e.re_psi(x)


def psi(e, x):
    return e.psi(x)


def psi_star(e, r):
    return e.psi_star(r)


def quadratic_form_K1(e, x):
    return e.quadratic_form_K1(x)
