"""Generating triplets and Levy measures with exact integral functionals.

A Levy measure is a small expression tree.  Leaves carry closed-form or
quadrature integrators:

* :class:`RadialDensity` - isotropic, with a radial law ``N(|z| in dr) = k(r) dr``;
* :class:`SphericalProduct` - finitely many rays ``xi_i`` with weights, each
  carrying the same radial profile;
* :class:`OneSidedDensity` - a profile on one half-line (d = 1);
* :class:`Cylindrical` - one-dimensional measures placed on the coordinate axes;
* :class:`AtomList` - finitely many point masses.

The algebra nodes :class:`Restriction`, :class:`Scale`, :class:`Sum` and
:class:`Difference` build the pieces of the small/large jump decomposition.
Every functional is computed on a radial window ``lo <= |z| < hi`` which the
nodes pass down the tree.
"""

from dataclasses import dataclass, field

import numpy as np

from ._special import abs_cosine_moment, cosine_law_rule, power_kernel, sphere_area, sphere_average_cos
from .errors import (
    CompoundPoisson,
    MinorizationViolated,
    NegativeDefinite,
    NegativeMass,
    NonIntegrableMeasure,
    NonSymmetricMatrix,
    NonUnitDirection,
    UnsupportedOperation,
)
from .profiles import INF, PowerProfile, RadialProfile, _logquad

DIFF_RTOL = 1e-12


def _as_points(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(1, -1) if X.shape[0] == dim else X.reshape(-1, 1)
    if X.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {X.shape}")
    return X


def _clip_window(lo, hi, a, b):
    return max(lo, a), min(hi, b)


def _sector_index(v):
    k = int(np.argmax(np.abs(v)))
    return 2 * k + (0 if v[k] >= 0 else 1)


class _Piece:
    """A compound-Poisson building block: jump rate and a sampler for jump sizes."""

    def __init__(self, rate, draw):
        self.rate = float(rate)
        self.draw = draw


class LevyMeasure:
    """Base class of all measure nodes."""

    dim: int

    # -- public functionals ------------------------------------------------
    def tail_mass(self, r):
        """N(|z| >= r)."""
        return self._radial(0, float(r), INF)

    def truncated_second_moment(self, r):
        """int_{|z| < r} |z|^2 N(dz)."""
        return self._radial(2, 0.0, float(r))

    def annulus_first_moment(self, r1, r2=INF):
        """int_{r1 <= |z| < r2} |z| N(dz)."""
        return self._radial(1, float(r1), float(r2))

    def radial_moment(self, p, r1=0.0, r2=INF):
        """int_{r1 <= |z| < r2} |z|^p N(dz)."""
        return self._radial(p, float(r1), float(r2))

    def total_mass(self):
        return self._radial(0, 0.0, INF)

    def first_moment_vector(self, r1, r2):
        """int_{r1 <= |z| < r2} z N(dz)."""
        return self._vector(float(r1), float(r2))

    def second_moment_matrix(self, r1, r2):
        """int_{r1 <= |z| < r2} z z^T N(dz)."""
        return self._matrix(float(r1), float(r2))

    def re_integral(self, X):
        """int (1 - cos<x, z>) N(dz) for each row x of X."""
        X = _as_points(X, self.dim)
        return self._re(X, 0.0, INF)

    def im_integral(self, X):
        """int (sin<x, z> - <x, z> 1{|z| < 1}) N(dz) for each row x of X."""
        X = _as_points(X, self.dim)
        return self._im(X, 0.0, INF)

    def sector_masses(self, r1, r2):
        """Masses of the annulus r1 <= |z| < r2 split into the 2d coordinate cones.

        Entry 2k collects the cone around +e_k, entry 2k+1 the cone around -e_k.
        """
        return self._sector(float(r1), float(r2))

    def pushforward(self, v):
        """One-dimensional image measure under z -> <v, z>, with the atom at 0 removed."""
        v = np.asarray(v, dtype=float).reshape(self.dim)
        return self._project(v, 0.0, INF)

    def projection_drift(self, v):
        """int <v,z> (1{|<v,z>| < 1} - 1{|z| < 1}) N(dz), the drift correction of a projection."""
        v = np.asarray(v, dtype=float).reshape(self.dim)
        return float(self._proj_drift(v, 0.0, INF))

    def pieces(self, eps):
        """Compound-Poisson pieces for jumps with |z| >= eps."""
        return list(self._pieces(float(eps), INF, 1.0))

    def is_symmetric(self):
        raise NotImplementedError

    # -- algebra helpers ---------------------------------------------------
    def restrict(self, radius, inside=True):
        return Restriction(self, radius, inside)

    def __add__(self, other):
        return Sum([self, other])

    def __sub__(self, other):
        return Difference(self, other)

    def __rmul__(self, factor):
        return Scale(self, factor)

    # -- node interface (windowed) -------------------------------------------
    def _radial(self, p, lo, hi):
        raise NotImplementedError

    def _vector(self, lo, hi):
        raise NotImplementedError

    def _matrix(self, lo, hi):
        raise NotImplementedError

    def _re(self, X, lo, hi):
        raise NotImplementedError

    def _im(self, X, lo, hi):
        raise NotImplementedError

    def _sector(self, lo, hi):
        raise NotImplementedError

    def _project(self, v, lo, hi):
        raise NotImplementedError

    def _proj_drift(self, v, lo, hi):
        raise NotImplementedError

    def _pieces(self, lo, hi, weight):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


class ZeroMeasure(LevyMeasure):
    """The zero measure on R^d."""

    def __init__(self, dim):
        self.dim = int(dim)

    def __repr__(self):
        return f"ZeroMeasure({self.dim})"

    def is_symmetric(self):
        return True

    def _radial(self, p, lo, hi):
        return 0.0

    def _vector(self, lo, hi):
        return np.zeros(self.dim)

    def _matrix(self, lo, hi):
        return np.zeros((self.dim, self.dim))

    def _re(self, X, lo, hi):
        return np.zeros(len(X))

    _im = _re

    def _sector(self, lo, hi):
        return np.zeros(2 * self.dim)

    def _project(self, v, lo, hi):
        return ZeroMeasure(1)

    def _proj_drift(self, v, lo, hi):
        return 0.0

    def _pieces(self, lo, hi, weight):
        return iter(())

    def to_dict(self):
        return {"type": "zero", "dim": self.dim}


class RadialDensity(LevyMeasure):
    """Isotropic measure whose radius has law ``profile`` and whose direction is uniform.

    For a Lebesgue density ``j(|z|)`` the profile is ``omega_d r^{d-1} j(r)``;
    :meth:`power` builds the stable case ``c |z|^{-d-alpha} dz``.
    """

    def __init__(self, dim, profile):
        self.dim = int(dim)
        if not isinstance(profile, RadialProfile):
            raise TypeError("profile must be a RadialProfile")
        self.profile = profile

    @classmethod
    def power(cls, dim, c, alpha):
        """The measure ``c |z|^{-dim-alpha} dz``."""
        return cls(dim, PowerProfile(c * sphere_area(dim), alpha))

    def __repr__(self):
        return f"RadialDensity({self.dim}, {self.profile!r})"

    def is_symmetric(self):
        return True

    def _radial(self, p, lo, hi):
        return self.profile.moment(p, lo, hi)

    def _vector(self, lo, hi):
        return np.zeros(self.dim)

    def _matrix(self, lo, hi):
        return np.eye(self.dim) * self.profile.moment(2, lo, hi) / self.dim

    def _re(self, X, lo, hi):
        rho = np.linalg.norm(X, axis=1)
        if self.dim == 1:
            return self.profile.cos_integral(rho, lo, hi)
        prof = self.profile
        out = np.zeros(len(X))
        if not hi > lo:
            return out
        if prof.is_power:
            nz = rho > 0
            g = power_kernel(prof.alpha, "cos", self.dim)
            up = g(rho[nz] * hi) if np.isfinite(hi) else g.limit
            dn = g(rho[nz] * lo) if lo > 0 else 0.0
            out[nz] = prof.c * rho[nz] ** prof.alpha * (up - dn)
            return out
        d = self.dim
        for i, a in enumerate(rho):
            if a == 0:
                continue
            r0 = min(max(1.0 / a, lo), hi)
            # a r overflows at the top of the log window, where the density has long vanished
            with np.errstate(over="ignore"):
                near = _logquad(lambda r: (1.0 - sphere_average_cos(d, a * r)) * prof.density(r), lo, r0)
                far = 0.0
                if hi > r0:
                    far = prof.moment(0, r0, hi) - _logquad(
                        lambda r: sphere_average_cos(d, a * r) * prof.density(r), r0, hi)
            out[i] = near + far
        return out

    def _im(self, X, lo, hi):
        return np.zeros(len(X))

    def _sector(self, lo, hi):
        return np.full(2 * self.dim, self.profile.moment(0, lo, hi) / (2 * self.dim))

    def _project(self, v, lo, hi):
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return ZeroMeasure(1)
        prof = self.profile
        if self.dim == 1:
            return _RayLeaf(1, [[1.0], [-1.0]], [0.5, 0.5], prof, scales=[nv, nv], rlo=lo, rhi=hi)
        if prof.is_power and lo == 0.0 and not np.isfinite(hi):
            c = prof.c * nv**prof.alpha * abs_cosine_moment(self.dim, prof.alpha)
            return RadialDensity(1, PowerProfile(c, prof.alpha))
        u, w = cosine_law_rule(self.dim)
        keep = u != 0
        u, w = u[keep], w[keep]
        return _RayLeaf(1, np.sign(u)[:, None], w, prof, scales=nv * np.abs(u), rlo=lo, rhi=hi)

    def _proj_drift(self, v, lo, hi):
        return 0.0

    def _pieces(self, lo, hi, weight):
        rate = weight * self.profile.moment(0, lo, hi)
        if rate > 0:
            prof, d = self.profile, self.dim

            def draw(rng, n):
                g = rng.standard_normal((n, d))
                g /= np.linalg.norm(g, axis=1, keepdims=True)
                return g * prof.sample(rng, n, lo, hi)[:, None]

            yield _Piece(rate, draw)

    def to_dict(self):
        return {"type": "radial", "dim": self.dim, "profile": self.profile.to_dict()}


class _RayLeaf(LevyMeasure):
    """Weighted rays: atom i is the image of ``w_i k(r) dr`` under r -> s_i r xi_i.

    ``rlo``/``rhi`` restrict the profile variable r (per atom) and are only used
    for images of restricted measures.
    """

    def __init__(self, dim, directions, weights, profile, scales=None, rlo=0.0, rhi=INF):
        self.dim = int(dim)
        self.directions = np.asarray(directions, dtype=float).reshape(-1, self.dim)
        m = len(self.directions)
        self.weights = np.asarray(weights, dtype=float).reshape(m)
        if np.any(self.weights < 0):
            raise ValueError("ray weights must be non-negative")
        self.scales = np.ones(m) if scales is None else np.asarray(scales, dtype=float).reshape(m)
        self.rlo = np.broadcast_to(np.asarray(rlo, dtype=float), (m,)).copy()
        self.rhi = np.broadcast_to(np.asarray(rhi, dtype=float), (m,)).copy()
        if not isinstance(profile, RadialProfile):
            raise TypeError("profile must be a RadialProfile")
        self.profile = profile

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, atoms={len(self.directions)}, {self.profile!r})"

    def _windows(self, lo, hi):
        s = self.scales
        return np.maximum(self.rlo, lo / s), np.minimum(self.rhi, hi / s)

    def is_symmetric(self):
        m = len(self.directions)
        used = np.zeros(m, dtype=bool)
        for i in range(m):
            if used[i]:
                continue
            match = None
            for j in range(m):
                if not used[j] and j != i and np.allclose(self.directions[j], -self.directions[i], atol=1e-14) \
                        and np.isclose(self.weights[j], self.weights[i], rtol=1e-14) \
                        and np.isclose(self.scales[j], self.scales[i], rtol=1e-14) \
                        and self.rlo[j] == self.rlo[i] and self.rhi[j] == self.rhi[i]:
                    match = j
                    break
            if match is None:
                if self.weights[i] == 0:
                    used[i] = True
                    continue
                return False
            used[i] = used[match] = True
        return True

    def _radial(self, p, lo, hi):
        a, b = self._windows(lo, hi)
        return float(sum(w * s**p * self.profile.moment(p, ai, bi)
                         for w, s, ai, bi in zip(self.weights, self.scales, a, b) if w > 0 and bi > ai))

    def _vector(self, lo, hi):
        a, b = self._windows(lo, hi)
        out = np.zeros(self.dim)
        for xi, w, s, ai, bi in zip(self.directions, self.weights, self.scales, a, b):
            if w > 0 and bi > ai:
                out += xi * w * s * self.profile.moment(1, ai, bi)
        return out

    def _matrix(self, lo, hi):
        a, b = self._windows(lo, hi)
        out = np.zeros((self.dim, self.dim))
        for xi, w, s, ai, bi in zip(self.directions, self.weights, self.scales, a, b):
            if w > 0 and bi > ai:
                out += np.outer(xi, xi) * w * s * s * self.profile.moment(2, ai, bi)
        return out

    def _re(self, X, lo, hi):
        a, b = self._windows(lo, hi)
        proj = X @ self.directions.T
        out = np.zeros(len(X))
        for i, (w, s, ai, bi) in enumerate(zip(self.weights, self.scales, a, b)):
            if w > 0 and bi > ai:
                out += w * self.profile.cos_integral(np.abs(proj[:, i]) * s, ai, bi)
        return out

    def _im(self, X, lo, hi):
        a, b = self._windows(lo, hi)
        proj = X @ self.directions.T
        out = np.zeros(len(X))
        for i, (w, s, ai, bi) in enumerate(zip(self.weights, self.scales, a, b)):
            if w > 0 and bi > ai:
                out += w * self.profile.sin_integral(proj[:, i] * s, ai, bi, cut=1.0 / s)
        return out

    def _sector(self, lo, hi):
        a, b = self._windows(lo, hi)
        out = np.zeros(2 * self.dim)
        for xi, w, ai, bi in zip(self.directions, self.weights, a, b):
            if w > 0 and bi > ai:
                out[_sector_index(xi)] += w * self.profile.moment(0, ai, bi)
        return out

    def _project(self, v, lo, hi):
        a, b = self._windows(lo, hi)
        c = self.directions @ v
        keep = (np.abs(c) > 1e-15) & (b > a) & (self.weights > 0)
        if not keep.any():
            return ZeroMeasure(1)
        return _RayLeaf(1, np.sign(c[keep])[:, None], self.weights[keep], self.profile,
                        scales=self.scales[keep] * np.abs(c[keep]), rlo=a[keep], rhi=b[keep])

    def _proj_drift(self, v, lo, hi):
        a, b = self._windows(lo, hi)
        c = self.directions @ v
        total = 0.0
        for ci, w, s, ai, bi in zip(c, self.weights, self.scales, a, b):
            ac = abs(ci)
            if w == 0 or ac == 0 or ac == 1.0:
                continue
            # the integrand is nonzero for 1/s <= r < 1/(|c| s) (|c| < 1) or the reverse
            u, t = sorted((1.0 / s, 1.0 / (ac * s)))
            u, t = max(u, ai), min(t, bi)
            if t > u:
                sign = 1.0 if ac < 1.0 else -1.0
                total += sign * ci * s * w * self.profile.moment(1, u, t)
        return total

    def _pieces(self, lo, hi, weight):
        a, b = self._windows(lo, hi)
        for xi, w, s, ai, bi in zip(self.directions, self.weights, self.scales, a, b):
            if w > 0 and bi > ai:
                rate = weight * w * self.profile.moment(0, ai, bi)
                if rate > 0:
                    yield _Piece(rate, self._ray_draw(xi, s, ai, bi))

    def _ray_draw(self, xi, s, ai, bi):
        prof = self.profile

        def draw(rng, n):
            return np.outer(s * prof.sample(rng, n, ai, bi), xi)

        return draw

    def to_dict(self):
        node = {
            "type": "rays",
            "dim": self.dim,
            "directions": self.directions.tolist(),
            "weights": self.weights.tolist(),
            "scales": self.scales.tolist(),
            "rlo": self.rlo.tolist(),
            "rhi": [None if not np.isfinite(x) else float(x) for x in self.rhi],
            "profile": self.profile.to_dict(),
        }
        return node


class SphericalProduct(_RayLeaf):
    """Product of a finite atomic sphere measure and a radial profile.

    ``N(B) = sum_i w_i int 1_B(r xi_i) k(r) dr``.  Directions are normalised.
    :meth:`from_density` discretises an angular density by a quadrature rule.
    """

    def __init__(self, dim, directions, weights, profile):
        d = np.asarray(directions, dtype=float).reshape(-1, int(dim))
        norms = np.linalg.norm(d, axis=1)
        if np.any(norms == 0):
            raise ValueError("sphere atoms need non-zero directions")
        super().__init__(dim, d / norms[:, None], weights, profile)

    @classmethod
    def from_density(cls, dim, density, profile, n=256):
        """Discretise ``lambda(dxi) = density(xi) sigma(dxi)`` (d = 2 or 3) into atoms."""
        if dim == 2:
            phi = 2 * np.pi * (np.arange(n) + 0.5) / n
            pts = np.column_stack([np.cos(phi), np.sin(phi)])
            w = density(pts) * 2 * np.pi / n
        elif dim == 3:
            m = max(int(np.sqrt(n / 2)), 4)
            z, wz = np.polynomial.legendre.leggauss(m)
            phi = 2 * np.pi * (np.arange(2 * m) + 0.5) / (2 * m)
            Z, P = np.meshgrid(z, phi, indexing="ij")
            rho = np.sqrt(1 - Z**2)
            pts = np.column_stack([(rho * np.cos(P)).ravel(), (rho * np.sin(P)).ravel(), Z.ravel()])
            w = density(pts) * np.repeat(wz, 2 * m) * (np.pi / m)
        else:
            raise ValueError("angular densities are supported for d = 2, 3")
        return cls(dim, pts, w, profile)

    def to_dict(self):
        return {"type": "spherical", "dim": self.dim, "directions": self.directions.tolist(),
                "weights": self.weights.tolist(), "profile": self.profile.to_dict()}


class OneSidedDensity(_RayLeaf):
    """A one-dimensional profile on the half-line of the given side (+1 or -1)."""

    def __init__(self, profile, side=1):
        if side not in (1, -1):
            raise ValueError("side must be +1 or -1")
        self.side = side
        super().__init__(1, [[float(side)]], [1.0], profile)

    def to_dict(self):
        return {"type": "one_sided", "side": self.side, "profile": self.profile.to_dict()}


class AtomList(LevyMeasure):
    """Finitely many point masses ``sum_i w_i delta_{z_i}``."""

    def __init__(self, points, weights):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.points = pts
        self.dim = pts.shape[1]
        self.weights = np.asarray(weights, dtype=float).reshape(len(pts))
        if np.any(self.weights < 0):
            raise ValueError("atom weights must be non-negative")
        if np.any(np.linalg.norm(pts, axis=1) == 0):
            raise ValueError("a Levy measure has no atom at the origin")
        self.radii = np.linalg.norm(pts, axis=1)

    def __repr__(self):
        return f"AtomList(dim={self.dim}, n={len(self.points)})"

    def _mask(self, lo, hi):
        return (self.radii >= lo) & (self.radii < hi)

    def is_symmetric(self):
        for z, w in zip(self.points, self.weights):
            hit = np.all(np.isclose(self.points, -z, atol=1e-14), axis=1)
            if not np.isclose(self.weights[hit].sum(), w, rtol=1e-14):
                return False
        return True

    def _radial(self, p, lo, hi):
        m = self._mask(lo, hi)
        return float(np.sum(self.weights[m] * self.radii[m] ** p))

    def _vector(self, lo, hi):
        m = self._mask(lo, hi)
        return (self.weights[m, None] * self.points[m]).sum(axis=0)

    def _matrix(self, lo, hi):
        m = self._mask(lo, hi)
        P = self.points[m]
        return (P * self.weights[m, None]).T @ P

    def _re(self, X, lo, hi):
        m = self._mask(lo, hi)
        return (1.0 - np.cos(X @ self.points[m].T)) @ self.weights[m]

    def _im(self, X, lo, hi):
        m = self._mask(lo, hi)
        arg = X @ self.points[m].T
        comp = (self.radii[m] < 1.0).astype(float)
        return (np.sin(arg) - arg * comp) @ self.weights[m]

    def _sector(self, lo, hi):
        out = np.zeros(2 * self.dim)
        for z, w in zip(self.points[self._mask(lo, hi)], self.weights[self._mask(lo, hi)]):
            out[_sector_index(z)] += w
        return out

    def _project(self, v, lo, hi):
        m = self._mask(lo, hi)
        s = self.points[m] @ v
        keep = s != 0
        if not keep.any():
            return ZeroMeasure(1)
        return AtomList(s[keep][:, None], self.weights[m][keep])

    def _proj_drift(self, v, lo, hi):
        m = self._mask(lo, hi)
        s = self.points[m] @ v
        ind = (np.abs(s) < 1).astype(float) - (self.radii[m] < 1).astype(float)
        return float(np.sum(self.weights[m] * s * ind))

    def _pieces(self, lo, hi, weight):
        m = self._mask(lo, hi)
        if m.any():
            pts, w = self.points[m], self.weights[m]
            rate = weight * w.sum()
            if rate > 0:
                prob = w / w.sum()

                def draw(rng, n):
                    return pts[rng.choice(len(pts), size=n, p=prob)]

                yield _Piece(rate, draw)

    def to_dict(self):
        return {"type": "atoms", "points": self.points.tolist(), "weights": self.weights.tolist()}


class Cylindrical(LevyMeasure):
    """One-dimensional measures placed on the coordinate axes of R^d.

    ``axes[k]`` is a one-dimensional :class:`LevyMeasure` (or ``None``) living
    on the line R e_k.
    """

    def __init__(self, axes):
        self.axes = [a for a in axes]
        self.dim = len(self.axes)
        for a in self.axes:
            if a is not None and a.dim != 1:
                raise ValueError("cylindrical axes must carry one-dimensional measures")

    def __repr__(self):
        return f"Cylindrical({self.axes!r})"

    def _each(self):
        return [(k, a) for k, a in enumerate(self.axes) if a is not None]

    def is_symmetric(self):
        return all(a.is_symmetric() for _, a in self._each())

    def _radial(self, p, lo, hi):
        return float(sum(a._radial(p, lo, hi) for _, a in self._each()))

    def _vector(self, lo, hi):
        out = np.zeros(self.dim)
        for k, a in self._each():
            out[k] = a._vector(lo, hi)[0]
        return out

    def _matrix(self, lo, hi):
        out = np.zeros((self.dim, self.dim))
        for k, a in self._each():
            out[k, k] = a._matrix(lo, hi)[0, 0]
        return out

    def _re(self, X, lo, hi):
        out = np.zeros(len(X))
        for k, a in self._each():
            out += a._re(X[:, k:k + 1], lo, hi)
        return out

    def _im(self, X, lo, hi):
        out = np.zeros(len(X))
        for k, a in self._each():
            out += a._im(X[:, k:k + 1], lo, hi)
        return out

    def _sector(self, lo, hi):
        out = np.zeros(2 * self.dim)
        for k, a in self._each():
            out[2 * k:2 * k + 2] = a._sector(lo, hi)
        return out

    def _project(self, v, lo, hi):
        parts = [a._project(np.array([v[k]]), lo, hi) for k, a in self._each() if v[k] != 0]
        if not parts:
            return ZeroMeasure(1)
        return parts[0] if len(parts) == 1 else Sum(parts)

    def _proj_drift(self, v, lo, hi):
        return float(sum(a._proj_drift(np.array([v[k]]), lo, hi) for k, a in self._each() if v[k] != 0))

    def _pieces(self, lo, hi, weight):
        for k, a in self._each():
            for piece in a._pieces(lo, hi, weight):
                yield _Piece(piece.rate, self._embed(piece.draw, k))

    def _embed(self, draw, k):
        d = self.dim

        def embedded(rng, n):
            out = np.zeros((n, d))
            out[:, k] = draw(rng, n)[:, 0]
            return out

        return embedded

    def to_dict(self):
        return {"type": "cylindrical", "axes": [None if a is None else a.to_dict() for a in self.axes]}


class Restriction(LevyMeasure):
    """Restriction of ``child`` to the open ball B_radius (inside) or its complement."""

    def __init__(self, child, radius, inside=True):
        if not radius > 0:
            raise ValueError("restriction radius must be positive")
        self.child = child
        self.dim = child.dim
        self.radius = float(radius)
        self.inside = bool(inside)

    def __repr__(self):
        return f"Restriction({self.child!r}, {self.radius}, inside={self.inside})"

    def _w(self, lo, hi):
        return (lo, min(hi, self.radius)) if self.inside else (max(lo, self.radius), hi)

    def is_symmetric(self):
        return self.child.is_symmetric()

    def _radial(self, p, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._radial(p, a, b) if b > a else 0.0

    def _vector(self, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._vector(a, b) if b > a else np.zeros(self.dim)

    def _matrix(self, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._matrix(a, b) if b > a else np.zeros((self.dim, self.dim))

    def _re(self, X, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._re(X, a, b) if b > a else np.zeros(len(X))

    def _im(self, X, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._im(X, a, b) if b > a else np.zeros(len(X))

    def _sector(self, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._sector(a, b) if b > a else np.zeros(2 * self.dim)

    def _project(self, v, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._project(v, a, b) if b > a else ZeroMeasure(1)

    def _proj_drift(self, v, lo, hi):
        a, b = self._w(lo, hi)
        return self.child._proj_drift(v, a, b) if b > a else 0.0

    def _pieces(self, lo, hi, weight):
        a, b = self._w(lo, hi)
        if b > a:
            yield from self.child._pieces(a, b, weight)

    def to_dict(self):
        return {"type": "restriction", "radius": self.radius, "inside": self.inside,
                "child": self.child.to_dict()}


class Scale(LevyMeasure):
    """``factor * child`` with factor >= 0."""

    def __init__(self, child, factor):
        if not factor >= 0:
            raise ValueError("scale factor must be non-negative")
        self.child = child
        self.dim = child.dim
        self.factor = float(factor)

    def __repr__(self):
        return f"Scale({self.child!r}, {self.factor})"

    def is_symmetric(self):
        return self.factor == 0 or self.child.is_symmetric()

    def _radial(self, p, lo, hi):
        return self.factor * self.child._radial(p, lo, hi) if self.factor else 0.0

    def _vector(self, lo, hi):
        return self.factor * self.child._vector(lo, hi)

    def _matrix(self, lo, hi):
        return self.factor * self.child._matrix(lo, hi)

    def _re(self, X, lo, hi):
        return self.factor * self.child._re(X, lo, hi)

    def _im(self, X, lo, hi):
        return self.factor * self.child._im(X, lo, hi)

    def _sector(self, lo, hi):
        return self.factor * self.child._sector(lo, hi)

    def _project(self, v, lo, hi):
        return Scale(self.child._project(v, lo, hi), self.factor)

    def _proj_drift(self, v, lo, hi):
        return self.factor * self.child._proj_drift(v, lo, hi)

    def _pieces(self, lo, hi, weight):
        if self.factor > 0:
            yield from self.child._pieces(lo, hi, weight * self.factor)

    def to_dict(self):
        return {"type": "scale", "factor": self.factor, "child": self.child.to_dict()}


class Sum(LevyMeasure):
    """Sum of measures of a common dimension."""

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise ValueError("empty sum")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise ValueError("summands must share a dimension")
        self.terms = terms
        self.dim = dims.pop()

    def __repr__(self):
        return f"Sum({self.terms!r})"

    def is_symmetric(self):
        return all(t.is_symmetric() for t in self.terms)

    def _radial(self, p, lo, hi):
        return float(sum(t._radial(p, lo, hi) for t in self.terms))

    def _vector(self, lo, hi):
        return sum(t._vector(lo, hi) for t in self.terms)

    def _matrix(self, lo, hi):
        return sum(t._matrix(lo, hi) for t in self.terms)

    def _re(self, X, lo, hi):
        return sum(t._re(X, lo, hi) for t in self.terms)

    def _im(self, X, lo, hi):
        return sum(t._im(X, lo, hi) for t in self.terms)

    def _sector(self, lo, hi):
        return sum(t._sector(lo, hi) for t in self.terms)

    def _project(self, v, lo, hi):
        return Sum([t._project(v, lo, hi) for t in self.terms])

    def _proj_drift(self, v, lo, hi):
        return float(sum(t._proj_drift(v, lo, hi) for t in self.terms))

    def _pieces(self, lo, hi, weight):
        for t in self.terms:
            yield from t._pieces(lo, hi, weight)

    def to_dict(self):
        return {"type": "sum", "terms": [t.to_dict() for t in self.terms]}


class Difference(LevyMeasure):
    """``minuend - subtrahend``; non-negativity is checked whenever a mass is queried."""

    def __init__(self, minuend, subtrahend):
        if minuend.dim != subtrahend.dim:
            raise ValueError("dimension mismatch")
        self.minuend = minuend
        self.subtrahend = subtrahend
        self.dim = minuend.dim

    def __repr__(self):
        return f"Difference({self.minuend!r}, {self.subtrahend!r})"

    @staticmethod
    def _checked(m, s, what):
        m = np.asarray(m, dtype=float)
        out = m - np.asarray(s, dtype=float)
        tol = DIFF_RTOL * (np.abs(m) + 1.0)
        if np.any(out < -tol):
            worst = float(np.min(out))
            raise NegativeMass(f"difference of measures is negative ({worst:.3e}) on a {what} query")
        return out

    def is_symmetric(self):
        return self.minuend.is_symmetric() and self.subtrahend.is_symmetric()

    def _radial(self, p, lo, hi):
        m = self.minuend._radial(p, lo, hi)
        s = self.subtrahend._radial(p, lo, hi)
        if np.isinf(m) and np.isinf(s):
            raise NegativeMass("difference of two infinite masses is undefined on this window")
        return float(self._checked(m, s, "radial"))

    def _vector(self, lo, hi):
        return self.minuend._vector(lo, hi) - self.subtrahend._vector(lo, hi)

    def _matrix(self, lo, hi):
        return self.minuend._matrix(lo, hi) - self.subtrahend._matrix(lo, hi)

    def _re(self, X, lo, hi):
        return self._checked(self.minuend._re(X, lo, hi), self.subtrahend._re(X, lo, hi), "cosine")

    def _im(self, X, lo, hi):
        return self.minuend._im(X, lo, hi) - self.subtrahend._im(X, lo, hi)

    def _sector(self, lo, hi):
        return self._checked(self.minuend._sector(lo, hi), self.subtrahend._sector(lo, hi), "sector")

    def _project(self, v, lo, hi):
        return Difference(self.minuend._project(v, lo, hi), self.subtrahend._project(v, lo, hi))

    def _proj_drift(self, v, lo, hi):
        return self.minuend._proj_drift(v, lo, hi) - self.subtrahend._proj_drift(v, lo, hi)

    def _pieces(self, lo, hi, weight):
        raise UnsupportedOperation("compound-Poisson sampling of a measure difference is not supported")

    def to_dict(self):
        return {"type": "difference", "minuend": self.minuend.to_dict(),
                "subtrahend": self.subtrahend.to_dict()}


# ---------------------------------------------------------------------------
# Triplets
# ---------------------------------------------------------------------------

class SymmetricMatrix:
    """A symmetric non-negative definite matrix (the Gaussian part A)."""

    def __init__(self, entries):
        a = np.atleast_2d(np.asarray(entries, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise NonSymmetricMatrix(f"matrix must be square, got shape {a.shape}")
        scale = np.max(np.abs(a)) if a.size else 0.0
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-14 * max(scale, 1.0)):
            raise NonSymmetricMatrix("Gaussian matrix is not symmetric")
        a = 0.5 * (a + a.T)
        eig = np.linalg.eigvalsh(a)
        norm = float(np.max(np.abs(eig))) if eig.size else 0.0
        if eig.size and eig.min() < -1e-12 * norm:
            raise NegativeDefinite(f"Gaussian matrix has eigenvalue {eig.min():.3e} < 0")
        self.entries = a
        self.entries.setflags(write=False)
        self.dim = a.shape[0]
        self.norm = norm

    def __repr__(self):
        return f"SymmetricMatrix({self.entries.tolist()!r})"

    def quadratic(self, X):
        X = np.atleast_2d(X)
        return np.einsum("ij,jk,ik->i", X, self.entries, X)


class GeneratingTriplet:
    """(A, N, b): Gaussian matrix, Levy measure and drift of a Levy process.

    The exponent convention is
    ``psi(x) = <x,Ax> - i<x,b> - int (e^{i<x,z>} - 1 - i<x,z> 1{|z|<1}) N(dz)``.
    Construction rejects compound-Poisson triplets (A = 0 with finite N)
    unless ``check=False``.
    """

    def __init__(self, A, N, b=None, name=None, reference=None, check=True):
        self.A = A if isinstance(A, SymmetricMatrix) else SymmetricMatrix(A)
        self.dim = self.A.dim
        if N is None:
            N = ZeroMeasure(self.dim)
        if N.dim != self.dim:
            raise NonIntegrableMeasure(f"measure dimension {N.dim} does not match A ({self.dim})")
        self.N = N
        b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float).reshape(self.dim)
        b.setflags(write=False)
        self.b = b
        self.name = name
        self.reference = dict(reference or {})
        if check:
            _check_integrable(self)
            _check_not_compound_poisson(self)

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<GeneratingTriplet{label} d={self.dim}>"

    def h_raw(self, r):
        """h(r) by the definition; the concentration module wraps this."""
        r = float(r)
        return self.A.norm / r**2 + self.N.tail_mass(r) + self.N.truncated_second_moment(r) / r**2

    def is_symmetric(self):
        return not np.any(self.b) and self.N.is_symmetric()


def _check_integrable(t):
    try:
        small = t.N.truncated_second_moment(1.0)
        large = t.N.tail_mass(1.0)
    except (ValueError, ArithmeticError) as exc:
        raise NonIntegrableMeasure(f"could not integrate 1 ^ |z|^2 against N: {exc}") from exc
    if not (np.isfinite(small) and np.isfinite(large)):
        raise NonIntegrableMeasure("int (1 ^ |z|^2) N(dz) is infinite")
    return small + large


H_PROBE_RADII = 10.0 ** -np.arange(1, 9)


def _check_not_compound_poisson(t):
    if t.A.norm > 0:
        return
    try:
        mass = t.N.total_mass()
    except (ValueError, ArithmeticError):
        mass = np.nan
    if np.isfinite(mass):
        raise CompoundPoisson("A = 0 and N is finite: h(0+) < infinity")
    hs = np.array([t.h_raw(r) for r in H_PROBE_RADII])
    if not (np.all(np.diff(hs) >= 0) and hs[-1] > hs[-2] * 1.01):
        raise CompoundPoisson("h stops growing as r -> 0; the process looks compound Poisson")


@dataclass
class ValidationReport:
    valid: bool
    dim: int
    gaussian_norm: float
    gaussian_only: bool
    symmetric_matrix: bool
    nonnegative_definite: bool
    jump_integral: float
    infinite_activity: bool
    h_probe_radii: list = field(default_factory=list)
    h_probe_values: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def validate_triplet(t):
    """Re-run the triplet checks and return a :class:`ValidationReport`.

    Raises the matching error (NonSymmetricMatrix, NegativeDefinite,
    NonIntegrableMeasure, CompoundPoisson) if a check fails.
    """
    SymmetricMatrix(t.A.entries)
    jump = _check_integrable(t)
    _check_not_compound_poisson(t)
    try:
        mass = t.N.total_mass()
    except (ValueError, ArithmeticError):
        mass = np.inf
    gaussian_only = isinstance(t.N, ZeroMeasure) or mass == 0.0
    hs = [t.h_raw(r) for r in H_PROBE_RADII]
    notes = []
    if gaussian_only:
        notes.append("Gaussian-only triplet")
    return ValidationReport(
        valid=True,
        dim=t.dim,
        gaussian_norm=t.A.norm,
        gaussian_only=gaussian_only,
        symmetric_matrix=True,
        nonnegative_definite=True,
        jump_integral=float(jump),
        infinite_activity=not np.isfinite(mass),
        h_probe_radii=H_PROBE_RADII.tolist(),
        h_probe_values=[float(h) for h in hs],
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Triplet-level operations
# ---------------------------------------------------------------------------

def tail_mass(N, r):
    """N({|z| >= r})."""
    if not r > 0:
        raise ValueError("r must be positive")
    return N.tail_mass(r)


def truncated_second_moment(N, r):
    """int_{|z|<r} |z|^2 N(dz)."""
    if not r > 0:
        raise ValueError("r must be positive")
    return N.truncated_second_moment(r)


def annulus_first_moment(N, r1, r2=INF):
    """int_{r1 <= |z| < r2} |z| N(dz)."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    return N.annulus_first_moment(r1, r2)


def effective_drift(t, r):
    """b_r = b + int z (1{|z|<r} - 1{|z|<1}) N(dz).

    Symmetric measures return b exactly.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    b = np.array(t.b, dtype=float)
    if t.N.is_symmetric() or r == 1.0:
        return b
    if r < 1.0:
        out = b - t.N.first_moment_vector(r, 1.0)
    else:
        out = b + t.N.first_moment_vector(1.0, r)
    if not np.all(np.isfinite(out)):
        from .errors import NonIntegrableAnnulus

        raise NonIntegrableAnnulus(f"first moment over the annulus between {r} and 1 is not finite")
    return out


def project_measure(t, v):
    """Triplet of the one-dimensional projection <v, Y> for a unit vector v."""
    v = np.asarray(v, dtype=float).reshape(t.dim)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise NonUnitDirection(f"|v| = {np.linalg.norm(v)!r} is not 1")
    a1 = float(v @ t.A.entries @ v)
    N1 = t.N.pushforward(v)
    b1 = float(v @ t.b) + t.N.projection_drift(v)
    return GeneratingTriplet([[a1]], N1, [b1], name=None, check=False)


DIAGNOSTIC_RADII = 2.0 ** np.arange(-20, 21)


def check_minorization(N, nu, a1, radii=DIAGNOSTIC_RADII):
    """Verify a1 * nu(S) <= N(S) on dyadic annuli times coordinate cones.

    Returns the smallest slack ratio found; raises MinorizationViolated with
    the offending set otherwise.  Only this diagnostic family is certified.
    """
    edges = np.concatenate([[0.0], np.asarray(radii, dtype=float), [INF]])
    worst = INF
    for lo, hi in zip(edges[:-1], edges[1:]):
        mN = N.sector_masses(lo, hi)
        mv = a1 * nu.sector_masses(lo, hi)
        for k, (x, y) in enumerate(zip(mN, mv)):
            if np.isinf(x):
                continue
            if y > x * (1 + 1e-12) + 1e-300:
                raise MinorizationViolated(
                    f"a1*nu = {y:.6g} exceeds N = {x:.6g} on annulus [{lo:.3g}, {hi:.3g}) cone {k}")
            if y > 0:
                worst = min(worst, x / y)
    return worst


def decompose_levy(t, nu, a1, lam):
    """Split N = N1 + N2 with N2 = (a1/2) nu restricted to B_lam.

    Returns the triplets (A, N - N2, b) and (0, N2, 0).  The Gaussian part is
    kept in the first component so that psi = psi1 + psi2 holds for every A.
    """
    if not 0 < a1 <= 1:
        raise ValueError("a1 must lie in (0, 1]")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    check_minorization(t.N, nu, a1)
    n2 = Scale(Restriction(nu, lam, inside=True), a1 / 2.0)
    n1 = Difference(t.N, n2)
    z1 = GeneratingTriplet(t.A, n1, t.b, check=False)
    z2 = GeneratingTriplet(np.zeros((t.dim, t.dim)), n2, np.zeros(t.dim), check=False)
    return z1, z2
