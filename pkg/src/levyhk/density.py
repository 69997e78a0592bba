"""Transition densities by Fourier inversion and the envelope verifications.

``p(t, x) = (2 pi)^{-d} int exp(-i<x, xi>) exp(-t psi(xi)) d xi`` is sampled
on a rectangular lattice by FFT.  The frequency box is certified by requiring
``t Re psi >= 40`` beyond it.  Periodisation of heavy tails is controlled by
oversampling in frequency: the transform runs on a period ``m`` times longer
than the window, and only the central window is kept.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline, RegularGridInterpolator
from scipy.special import roots_legendre

from .concentration import ConcentrationFn
from .errors import (AliasingDetected, BracketFailure, NotIntegrable, QuadratureFailure,
                     VariantPreconditionFailed)
from .exponent import CharExponent
from .measure import Cylindrical, GeneratingTriplet, RadialDensity, ZeroMeasure, effective_drift, project_measure

EXPONENT_CUTOFF = 40.0
CLIP_LEVEL = 1e-9
ALIAS_TOL = 1e-6
PASS_MASS_ERROR = 1e-4
FAIL_MASS_ERROR = 1e-2
DEFAULT_POINTS = {1: 2**14, 2: 1024, 3: 128}
MAX_WINDOW_POINTS = {1: 2**20, 2: 2048, 3: 256}
MAX_TRANSFORM = {1: 2**24, 2: 2048, 3: 256}
MAX_DENSE = 2**24
THETAS = (1.0, 5.0, 20.0)


def sandwich_constant(d):
    """8(1+2d): Re psi* (r) >= h(1/r) / (8(1+2d))."""
    return 8.0 * (1 + 2 * d)


def cutoff_rule(conc, t, d):
    """Smallest R with t h(1/R) / (8(1+2d)) >= 40 (inf if out of numeric range)."""
    u = EXPONENT_CUTOFF * sandwich_constant(d) / t
    try:
        return 1.0 / conc.inverse(u)
    except BracketFailure:
        return np.inf


def time_scale(conc, t):
    """h^{-1}(1/t), the natural space scale at time t."""
    return conc.inverse(1.0 / t)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DensityGrid:
    """p(t, .) on a rectangular lattice ``center + axes``.

    ``mass_error`` is |1 - sum p dV| over the full oversampled period after
    clipping; it detects ringing and frequency truncation.  ``alias_bound`` is
    the a-priori periodisation estimate at the window, relative to the
    envelope [h^{-1}(1/t)]^{-d}.  Product laws keep their one-dimensional
    factors in ``factors`` and materialise ``values`` only when small.
    """

    t: float
    axes: tuple
    values: np.ndarray | None
    mass_error: float
    cutoff: float
    cutoff_rule: float
    certification: str
    oversample: tuple
    alias_bound: float
    clipped: float
    window_mass: float
    center: np.ndarray
    scale: float
    factors: tuple | None = None

    @property
    def dim(self):
        return len(self.axes)

    @property
    def spacing(self):
        return np.array([a[1] - a[0] for a in self.axes])

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def pass_grade(self):
        return self.mass_error <= PASS_MASS_ERROR

    def coordinates(self, k):
        return self.center[k] + self.axes[k]

    def dense(self):
        if self.values is not None:
            return self.values
        if int(np.prod(self.shape)) > MAX_DENSE:
            raise MemoryError("product grid is too large to materialise; use evaluate()")
        out = self.factors[0].values
        for f in self.factors[1:]:
            out = np.multiply.outer(out, f.values)
        return out

    def evaluate(self, points):
        """Linear interpolation at absolute positions (rows of ``points``)."""
        P = np.atleast_2d(np.asarray(points, float))
        if self.factors is not None:
            out = np.ones(len(P))
            for k, f in enumerate(self.factors):
                out *= f.evaluate(P[:, k:k + 1])
            return out
        grid = tuple(self.coordinates(k) for k in range(self.dim))
        interp = RegularGridInterpolator(grid, self.values, bounds_error=False, fill_value=np.nan)
        return interp(P)

    def maximum(self):
        """(value, absolute location, index) of the largest node."""
        if self.factors is not None:
            vals, locs, idx = 1.0, [], []
            for f in self.factors:
                v, x, i = f.maximum()
                vals *= v
                locs.append(x[0])
                idx.append(i[0])
            return vals, np.array(locs), tuple(idx)
        i = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        x = np.array([self.coordinates(k)[i[k]] for k in range(self.dim)])
        return float(self.values[i]), x, i

    def to_rows(self):
        """(coordinates..., value) rows for CSV export."""
        vals = self.dense()
        mesh = np.meshgrid(*[self.coordinates(k) for k in range(self.dim)], indexing="ij")
        return np.column_stack([m.ravel() for m in mesh] + [vals.ravel()])

    def summary(self):
        return {
            "t": self.t, "dim": self.dim, "shape": list(self.shape),
            "spacing": self.spacing.tolist(), "center": self.center.tolist(),
            "mass_error": self.mass_error, "window_mass": self.window_mass,
            "cutoff": self.cutoff, "cutoff_rule": self.cutoff_rule,
            "certification": self.certification, "oversample": list(self.oversample),
            "alias_bound": self.alias_bound, "clipped": self.clipped,
            "pass_grade": bool(self.pass_grade), "factorized": self.factors is not None,
        }


def _product_factors(triplet):
    """One-dimensional triplets of independent coordinates, or None."""
    d = triplet.dim
    if d == 1:
        return None
    A = triplet.A.entries
    if np.any(A - np.diag(np.diag(A))):
        return None
    N = triplet.N
    if isinstance(N, ZeroMeasure):
        axes = [None] * d
    elif isinstance(N, Cylindrical):
        axes = N.axes
    else:
        return None
    out = []
    for k in range(d):
        Nk = axes[k] if axes[k] is not None else ZeroMeasure(1)
        tk = GeneratingTriplet([[A[k, k]]], Nk, [triplet.b[k]], check=False)
        if A[k, k] == 0 and np.isfinite(Nk.total_mass()):
            raise NotIntegrable(f"coordinate {k} has no Gaussian part and finite jump mass")
        out.append(tk)
    return out


def _rotation_invariant_3d(triplet):
    if triplet.dim != 3 or np.any(triplet.b):
        return False
    A = triplet.A.entries
    return np.allclose(A, A[0, 0] * np.eye(3)) and isinstance(triplet.N, (RadialDensity, ZeroMeasure))


def _radial_3d(triplet, t, n, extent, center, alias_tol, oversample):
    """Rotation-invariant laws in d = 3 from the law of one coordinate.

    The marginal satisfies p_1(x) = 2 pi int_{|x|}^inf p_3(r) r dr, so
    p_3(r) = -p_1'(r) / (2 pi r) with the limit -p_1''(0) / (2 pi) at the origin.
    A three-dimensional FFT box cannot resolve small-alpha laws, the marginal can.
    """
    conc = ConcentrationFn(triplet)
    scale = time_scale(conc, t)
    ctr = np.zeros(3) if center is None else np.asarray(center, float).reshape(3)
    half = max(10.0 * scale, 0.0 if extent is None else float(np.max(extent)))
    npts = DEFAULT_POINTS[3] if n is None else int(n)
    reach = np.sqrt(3.0) * half + float(np.linalg.norm(ctr))
    line = density_grid(project_measure(triplet, [1.0, 0.0, 0.0]), t, extent=1.05 * reach,
                        alias_tol=alias_tol, oversample=oversample)
    f = line.values
    h = line.spacing[0]
    i0 = int(np.argmin(np.abs(line.axes[0])))
    j = np.arange(i0, len(f) - 2)
    # fourth-order central differences
    d1 = (-f[j + 2] + 8 * f[j + 1] - 8 * f[j - 1] + f[j - 2]) / (12 * h)
    d2 = (-f[i0 + 2] + 16 * f[i0 + 1] - 30 * f[i0] + 16 * f[i0 - 1] - f[i0 - 2]) / (12 * h * h)
    r = line.axes[0][j]
    prof = np.empty(len(j))
    prof[0] = -d2 / (2 * np.pi)
    prof[1:] = -d1[1:] / (2 * np.pi * r[1:])
    spline = CubicSpline(r, np.maximum(prof, 0.0))
    dx = 2.0 * half / npts
    axis = (np.arange(npts) - npts // 2) * dx
    X, Y, Z = np.meshgrid(*(ctr[k] + axis for k in range(3)), indexing="ij", sparse=True)
    vals = spline(np.sqrt(X * X + Y * Y + Z * Z))
    vol = dx**3
    return DensityGrid(t=t, axes=(axis,) * 3, values=np.ascontiguousarray(vals), mass_error=line.mass_error,
                       cutoff=line.cutoff, cutoff_rule=line.cutoff_rule, certification="radial:" + line.certification,
                       oversample=line.oversample, alias_bound=line.alias_bound, clipped=line.clipped,
                       window_mass=float(vals.sum()) * vol, center=ctr, scale=scale)


def _sign(n):
    return 1.0 - 2.0 * (np.arange(n) % 2)


def _boundary_points(R, d, per_edge=256):
    """Points on the boundary of the box prod [-R_k, R_k] and outward multiples."""
    R = np.asarray(R, float)
    if d == 1:
        base = np.array([[R[0]], [-R[0]]])
    else:
        k = per_edge if d == 2 else 32
        lin = np.linspace(-1.0, 1.0, k)
        faces = []
        for ax in range(d):
            others = np.meshgrid(*[lin] * (d - 1), indexing="ij")
            cols = [o.ravel() for o in others]
            for s in (-1.0, 1.0):
                pts = np.empty((len(cols[0]), d))
                j = 0
                for a in range(d):
                    if a == ax:
                        pts[:, a] = s
                    else:
                        pts[:, a] = cols[j]
                        j += 1
                faces.append(pts)
        base = np.vstack(faces) * R
    mult = np.array([1.0, 1.5, 2.0, 4.0, 8.0, 16.0])
    return (mult[:, None, None] * base[None]).reshape(-1, d)


def _certify(expo, t, R, rule):
    """Check the frequency box: by the h-based rule or directly on its boundary."""
    if np.min(R) >= rule:
        return "h-bound"
    pts = _boundary_points(R, len(R))
    if np.min(t * expo.re_psi(pts)) >= EXPONENT_CUTOFF:
        return "direct"
    return None


def _phi_grid(expo, t, xis, center, chunk=2**18):
    """exp(-t psi(xi) - i<center, xi>) on the tensor grid, using psi(-xi) = conj psi(xi)."""
    d = len(xis)
    shape = tuple(len(x) for x in xis)
    M0 = shape[0]
    phi = np.empty(shape, dtype=complex)
    rest = np.meshgrid(*xis[1:], indexing="ij") if d > 1 else []
    rest = [r.ravel() for r in rest]
    nrest = len(rest[0]) if d > 1 else 1

    def eval_rows(rows):
        out = np.empty((len(rows), nrest), dtype=complex)
        per = max(1, chunk // nrest)
        for s in range(0, len(rows), per):
            rr = rows[s:s + per]
            pts = np.empty((len(rr) * nrest, d))
            pts[:, 0] = np.repeat(xis[0][rr], nrest)
            for k in range(1, d):
                pts[:, k] = np.tile(rest[k - 1], len(rr))
            val = -t * expo.psi(pts) - 1j * (pts @ center)
            out[s:s + len(rr)] = np.exp(val).reshape(len(rr), nrest)
        return out

    upper = np.arange(M0 // 2, M0)
    phi[upper] = eval_rows(upper).reshape((len(upper),) + shape[1:])
    phi[0] = eval_rows(np.array([0])).reshape(shape[1:])
    lower = np.arange(1, M0 // 2)
    if len(lower):
        src = phi[M0 - lower]
        for ax in range(1, d):
            M = shape[ax]
            idx = (M - np.arange(M)) % M
            src = np.take(src, idx, axis=ax)
        phi[lower] = np.conj(src)
    return phi


def _invert(expo, t, half, n, m, center):
    """FFT inversion on the window center + [-half, half) with oversampling m."""
    d = len(n)
    dx = [2.0 * half[k] / n[k] for k in range(d)]
    M = [m[k] * n[k] for k in range(d)]
    xis = [(np.arange(M[k]) - M[k] // 2) * 2.0 * np.pi / (M[k] * dx[k]) for k in range(d)]
    phi = _phi_grid(expo, t, xis, np.asarray(center, float))
    for k in range(d):
        s = _sign(M[k]).reshape([-1 if a == k else 1 for a in range(d)])
        phi *= s
    vals = sfft.fftn(phi, workers=-1)
    del phi
    vals = vals.real
    for k in range(d):
        s = _sign(M[k]).reshape([-1 if a == k else 1 for a in range(d)])
        vals *= s
    vals /= float(np.prod([M[k] * dx[k] for k in range(d)]))
    peak = float(vals.max())
    low = float(vals.min())
    clipped = low / peak if peak > 0 else 0.0
    vals = np.maximum(vals, 0.0)
    vol = float(np.prod(dx))
    total = float(vals.sum()) * vol
    sl = tuple(slice(M[k] // 2 - n[k] // 2, M[k] // 2 + n[k] // 2) for k in range(d))
    window = np.ascontiguousarray(vals[sl])
    axes = tuple((np.arange(n[k]) - n[k] // 2) * dx[k] for k in range(d))
    return window, axes, abs(1.0 - total), clipped, float(window.sum()) * vol


def _oversample(conc, t, d, half, n, scale, alias_tol):
    """Smallest power-of-two m with 2^d t h_N(s) s^{-d} <= tol [h^{-1}(1/t)]^{-d}, s = (2m-1) L."""
    normA = conc.norm_A
    target = alias_tol * scale ** (-d)
    cap = MAX_TRANSFORM[d]
    L = float(min(half))

    def est(m):
        s = (2 * m - 1) * L
        hN = max(conc.h(s) - normA / s**2, 0.0)
        return 2.0**d * t * hN * s ** (-d)

    m = 1
    while est(m) > target and max(n) * m * 2 <= cap:
        m *= 2
    return m, est(m) * scale**d


def density_grid(triplet, time, n=None, extent=None, center=None, alias_tol=ALIAS_TOL,
                 oversample=None):
    """p(time, .) on a lattice of n points per axis centred at ``center``.

    The half-width per axis is max(10 h^{-1}(1/t), 10 |t b_{h^{-1}(1/t)}|, extent).
    """
    t = float(time)
    if not t > 0:
        raise ValueError("time must be positive")
    d = triplet.dim
    factors = _product_factors(triplet)
    if factors is not None:
        ctr = np.zeros(d) if center is None else np.asarray(center, float)
        ext = np.broadcast_to(np.asarray(0.0 if extent is None else extent, float), (d,))
        nn = None if n is None else np.broadcast_to(np.asarray(n), (d,))
        parts = tuple(density_grid(f, t, n=None if nn is None else int(nn[k]), extent=float(ext[k]),
                                   center=[ctr[k]], alias_tol=alias_tol, oversample=oversample)
                      for k, f in enumerate(factors))
        conc = ConcentrationFn(triplet)
        vals = None
        if int(np.prod([len(p.axes[0]) for p in parts])) <= MAX_DENSE:
            vals = parts[0].values
            for p in parts[1:]:
                vals = np.multiply.outer(vals, p.values)
        wm = float(np.prod([p.window_mass for p in parts]))
        return DensityGrid(
            t=t, axes=tuple(p.axes[0] for p in parts), values=vals,
            mass_error=float(sum(p.mass_error for p in parts)),
            cutoff=float(min(p.cutoff for p in parts)),
            cutoff_rule=float(max(p.cutoff_rule for p in parts)),
            certification="product:" + ",".join(p.certification for p in parts),
            oversample=tuple(p.oversample[0] for p in parts),
            alias_bound=float(sum(p.alias_bound for p in parts)),
            clipped=float(min(p.clipped for p in parts)), window_mass=wm, center=ctr,
            scale=time_scale(conc, t), factors=parts)

    if _rotation_invariant_3d(triplet):
        return _radial_3d(triplet, t, n, extent, center, alias_tol, oversample)

    conc = ConcentrationFn(triplet)
    expo = CharExponent(triplet)
    scale = time_scale(conc, t)
    drift = t * effective_drift(triplet, scale)
    ctr = np.zeros(d) if center is None else np.asarray(center, float).reshape(d)
    half = np.maximum(10.0 * scale, 10.0 * np.abs(drift))
    if extent is not None:
        half = np.maximum(half, np.broadcast_to(np.asarray(extent, float), (d,)))
    npts = np.full(d, DEFAULT_POINTS.get(d, 64) if n is None else int(n))
    rule = cutoff_rule(conc, t, d)
    while True:
        dx = 2.0 * half / npts
        R = np.pi / dx
        cert = _certify(expo, t, R, rule)
        if cert is not None:
            break
        if npts[0] * 2 > MAX_WINDOW_POINTS.get(d, 64):
            raise NotIntegrable(
                f"t Re psi stays below {EXPONENT_CUTOFF} at the largest admissible frequency box "
                f"(R = {R.min():.3g}, rule {rule:.3g})")
        npts = npts * 2
    if oversample is None:
        m, alias = _oversample(conc, t, d, half, npts, scale, alias_tol)
    else:
        m = int(oversample)
        alias = np.nan
    window, axes, mass_error, clipped, wmass = _invert(expo, t, half, list(npts), [m] * d, ctr)
    if clipped < -CLIP_LEVEL or mass_error > FAIL_MASS_ERROR:
        raise AliasingDetected(
            f"inversion unreliable: negative excursion {clipped:.3g} of peak, mass error {mass_error:.3g}")
    return DensityGrid(t=t, axes=axes, values=window, mass_error=mass_error, cutoff=float(R.min()),
                       cutoff_rule=float(rule), certification=cert, oversample=(m,) * d,
                       alias_bound=float(alias), clipped=clipped, window_mass=wmass, center=ctr,
                       scale=scale)


# ---------------------------------------------------------------------------
# direct quadrature at a point
# ---------------------------------------------------------------------------
def _direct_cutoff(expo, conc, t, d):
    scale = time_scale(conc, t)
    R = 4.0 / scale
    rule = cutoff_rule(conc, t, d)
    while True:
        if R >= rule or np.min(t * expo.re_psi(_boundary_points(np.full(d, R), d, 64))) >= EXPONENT_CUTOFF:
            return R, scale
        R *= 2.0
        if R > 1e12 / scale:
            raise NotIntegrable("no frequency cutoff with t Re psi >= 40 was found")


def _panels(R, width, nodes, geometric=True):
    """Gauss-Legendre nodes/weights on [0, R] with panels of the given width,
    refined geometrically towards 0."""
    g, w = roots_legendre(nodes)
    edges = list(np.arange(0.0, R, width)) + [R]
    if geometric and len(edges) > 1:
        first = edges[1]
        geo = first * 2.0 ** -np.arange(1, 40)[::-1]
        edges = [0.0] + list(geo) + edges[1:]
    edges = np.unique(np.asarray(edges))
    a, b = edges[:-1], edges[1:]
    xs = (0.5 * (b - a))[:, None] * g[None, :] + (0.5 * (a + b))[:, None]
    ws = (0.5 * (b - a))[:, None] * w[None, :]
    return xs.ravel(), ws.ravel()


def density_point(triplet, time, x, rtol=1e-8, nodes=None, return_error=False):
    """p(time, x) by direct quadrature of the inversion integral.

    With ``return_error`` (d = 1 only) the absolute accuracy of the value is
    returned as well; values below it are numerically zero.
    """
    t = float(time)
    d = triplet.dim
    x = np.asarray(x, float).reshape(d)
    expo = CharExponent(triplet)
    conc = ConcentrationFn(triplet)
    R, scale = _direct_cutoff(expo, conc, t, d)
    if d == 1:
        def value(width, k):
            xi, w = _panels(R, width, k)
            psi = expo.psi(xi[:, None])
            f = np.exp(-t * psi.real) * np.cos(x[0] * xi + t * psi.imag)
            return float(w @ f) / np.pi, float(w @ np.exp(-t * psi.real)) / np.pi

        width = 0.5 * min(1.0 / scale, np.pi / max(abs(x[0]), 1e-300))
        k = nodes or 24
        v1, peak = value(width, k)
        v2, _ = value(width / 2, k)
        err = abs(v1 - v2)
        tol = rtol * abs(v2) + 1e-13 * peak
        if err > tol:
            raise QuadratureFailure(f"point density did not converge at x = {x}", achieved=err)
        if return_error:
            return max(v2, 0.0), err + 1e-13 * peak
        return max(v2, 0.0)
    width = 0.5 * min(1.0 / scale, np.pi / max(np.max(np.abs(x)), 1e-300))
    xi1, w1 = _panels(R, width, nodes or 8, geometric=False)
    xi1 = np.concatenate([-xi1[::-1], xi1])
    w1 = np.concatenate([w1[::-1], w1])
    total = 0.0
    mesh = np.meshgrid(*[xi1] * (d - 1), indexing="ij")
    rest = np.column_stack([m.ravel() for m in mesh])
    wrest = np.prod(np.meshgrid(*[w1] * (d - 1), indexing="ij"), axis=0).ravel()
    for i in range(len(xi1)):
        pts = np.column_stack([np.full(len(rest), xi1[i]), rest])
        psi = expo.psi(pts)
        f = np.exp(-t * psi.real) * np.cos(pts @ x + t * psi.imag)
        total += w1[i] * float(wrest @ f)
    return max(total / (2 * np.pi) ** d, 0.0)


def cdf_point(triplet, time, x, rtol=1e-8, nodes=24):
    """P(Y_t <= x) for d = 1 by the Gil-Pelaez inversion formula.

    Used for mass statements (e.g. mass left of a support) that a periodic
    FFT window cannot resolve when the tails are heavy.
    """
    if triplet.dim != 1:
        raise ValueError("cdf_point is one-dimensional")
    t = float(time)
    x = float(x)
    expo = CharExponent(triplet)
    conc = ConcentrationFn(triplet)
    R, scale = _direct_cutoff(expo, conc, t, 1)

    def value(width):
        xi, w = _panels(R, width, nodes)
        psi = expo.psi(xi[:, None])
        f = np.exp(-t * psi.real) * np.sin(x * xi + t * psi.imag) / xi
        return 0.5 + float(w @ f) / np.pi

    width = 0.5 * min(1.0 / scale, np.pi / max(abs(x), 1e-300))
    v1, v2 = value(width), value(width / 2)
    if abs(v1 - v2) > rtol * max(abs(v2), 1.0):
        raise QuadratureFailure(f"distribution function did not converge at x = {x}", achieved=abs(v1 - v2))
    return min(max(v2, 0.0), 1.0)


# ---------------------------------------------------------------------------
# sup, envelopes, gradients
# ---------------------------------------------------------------------------
@dataclass
class SupResult:
    value: float
    location: np.ndarray
    cells_from_origin: float
    scale: float
    grid: DensityGrid = field(repr=False)

    @property
    def mode_ratio(self):
        """|x_t| / h^{-1}(1/t)."""
        return float(np.linalg.norm(self.location) / self.scale)


def _refine_1d(f_minus, f0, f_plus):
    den = f_minus - 2 * f0 + f_plus
    if den >= 0:
        return 0.0, f0
    delta = 0.5 * (f_minus - f_plus) / den
    delta = float(np.clip(delta, -0.5, 0.5))
    return delta, f0 - 0.25 * (f_minus - f_plus) * delta


def sup_density(triplet, time, grid=None, check_symmetry=True, **grid_kw):
    """Grid maximum refined by a per-axis parabola; returns the witness x_t."""
    g = grid if grid is not None else density_grid(triplet, time, **grid_kw)
    if g.factors is not None:
        parts = [sup_density(None, time, grid=f, check_symmetry=False) for f in g.factors]
        val = float(np.prod([p.value for p in parts]))
        loc = np.array([p.location[0] for p in parts])
    else:
        v, loc, idx = g.maximum()
        loc = loc.copy()
        val = v
        vals = g.values
        for k in range(g.dim):
            i = idx[k]
            if 0 < i < vals.shape[k] - 1:
                lo = list(idx)
                hi = list(idx)
                lo[k] -= 1
                hi[k] += 1
                delta, vk = _refine_1d(vals[tuple(lo)], vals[idx], vals[tuple(hi)])
                loc[k] += delta * g.spacing[k]
                val = max(val, vk)
    cells = float(np.max(np.abs(loc) / g.spacing))
    scale = g.scale
    if check_symmetry and triplet is not None and triplet.is_symmetric() and cells > 2.0:
        raise AliasingDetected(f"symmetric law has its grid maximum {cells:.2f} cells from 0")
    return SupResult(value=float(val), location=loc, cells_from_origin=cells, scale=scale, grid=g)


@dataclass
class EnvelopeCertificate:
    kind: str
    t_grid: list
    ratios: list
    band: float
    verdict: str
    witness: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def min_ratio(self):
        return float(np.min(self.ratios))

    @property
    def max_ratio(self):
        return float(np.max(self.ratios))

    @property
    def spread(self):
        lo = self.min_ratio
        return float(self.max_ratio / lo) if lo > 0 else np.inf

    def to_dict(self):
        return {"kind": self.kind, "t_grid": [float(t) for t in self.t_grid],
                "ratios": [float(r) for r in self.ratios], "min_ratio": self.min_ratio,
                "max_ratio": self.max_ratio, "spread": self.spread, "band": self.band,
                "verdict": self.verdict, "witness": _jsonable(self.witness),
                "parameters": _jsonable(self.parameters), "notes": list(self.notes)}

    def gnuplot(self):
        lines = [f"# {self.kind} envelope ratios", "# t ratio"]
        lines += [f"{t:.17g} {r:.17g}" for t, r in zip(self.t_grid, self.ratios)]
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def dyadic_times(tmin, tmax):
    """Dyadic times 2^k inside [tmin, tmax], in decreasing order."""
    kmin = int(np.ceil(np.log2(tmin) - 1e-12))
    kmax = int(np.floor(np.log2(tmax) + 1e-12))
    return [2.0**k for k in range(kmax, kmin - 1, -1)]


def verify_upper_envelope(triplet, t_grid, band=1.5, **grid_kw):
    """Ratio series sup_x p(t, x) [h^{-1}(1/t)]^d over t_grid; pass iff max/min <= band."""
    d = triplet.dim
    ratios, locs = [], []
    for t in t_grid:
        s = sup_density(triplet, t, check_symmetry=False, **grid_kw)
        ratios.append(s.value * s.scale**d)
        locs.append(s.location.tolist())
    cert = EnvelopeCertificate(kind="upper", t_grid=list(t_grid), ratios=ratios, band=band,
                               verdict="pass")
    if cert.spread > band:
        cert.verdict = "fail"
    i = int(np.argmax(ratios))
    cert.witness = {"t": float(t_grid[i]), "x": locs[i], "ratio": float(ratios[i])}
    cert.parameters = {"dim": d}
    return cert


LOWER_VARIANTS = ("gaussian", "symmetric-minorant", "alpha-ge-1")


def _lower_scale(triplet, variant, minorant):
    if variant == "gaussian":
        return lambda t: np.sqrt(t)
    if variant == "symmetric-minorant":
        cs = ConcentrationFn(minorant)
        return lambda t: cs.inverse(1.0 / t)
    conc = ConcentrationFn(triplet)
    return lambda t: conc.inverse(1.0 / t)


def check_lower_preconditions(triplet, variant, minorant=None, a1=None, a2=None):
    """Raise VariantPreconditionFailed unless the variant's hypotheses hold on the lattices."""
    from .conditions import check_C3
    from .measure import check_minorization
    from .errors import MinorizationViolated

    if variant not in LOWER_VARIANTS:
        raise VariantPreconditionFailed(f"unknown variant {variant!r}")
    if variant == "gaussian":
        if triplet.A.norm == 0:
            raise VariantPreconditionFailed("the gaussian variant needs A != 0")
        rep = check_C3(CharExponent(triplet), ConcentrationFn(triplet))
        if rep.verdict != "pass":
            raise VariantPreconditionFailed("the gaussian variant needs (C3)")
        return {"c3": rep.constants}
    if variant == "alpha-ge-1":
        if triplet.A.norm != 0:
            raise VariantPreconditionFailed("the alpha-ge-1 variant needs A = 0")
        rep = check_C3(CharExponent(triplet), ConcentrationFn(triplet))
        if rep.verdict != "pass" or rep.constants.get("alpha3", 0.0) < 1.0:
            raise VariantPreconditionFailed("the alpha-ge-1 variant needs (C3) with alpha_3 >= 1")
        return {"c3": rep.constants}
    if minorant is None or a1 is None or a2 is None:
        raise VariantPreconditionFailed("the symmetric-minorant variant needs a registered (nu_s, a1, a2)")
    if triplet.A.norm != 0:
        raise VariantPreconditionFailed("the symmetric-minorant variant needs A = 0")
    if not minorant.N.is_symmetric():
        raise VariantPreconditionFailed("the minorant measure must be symmetric")
    try:
        check_minorization(triplet.N, minorant.N, a1)
    except MinorizationViolated as exc:
        raise VariantPreconditionFailed(str(exc)) from exc
    from ._special import direction_grid

    e, es = CharExponent(triplet), CharExponent(minorant)
    dirs = direction_grid(triplet.dim, 64 if triplet.dim > 1 else 2)
    radii = 2.0 ** np.arange(0, 21)
    pts = (radii[:, None, None] * dirs[None]).reshape(-1, triplet.dim)
    ratio = float(np.max(e.re_psi(pts) / es.re_psi(pts)))
    if ratio > a2 * (1 + 1e-9):
        raise VariantPreconditionFailed(f"Re psi <= a2 Re psi_s fails: observed ratio {ratio:.4g} > a2 = {a2}")
    rep = check_C3(e, ConcentrationFn(triplet))
    if rep.verdict != "pass":
        raise VariantPreconditionFailed("the symmetric-minorant variant needs (C3)")
    return {"a1": a1, "a2": a2, "observed_a2": ratio}


def _disk_points(g, radius, shift):
    """Absolute positions of the grid nodes within ``radius`` of ``shift``."""
    d = g.dim
    coords = [g.coordinates(k) for k in range(d)]
    if d == 1:
        x = coords[0]
        sel = np.abs(x - shift[0]) <= radius
        return x[sel][:, None], sel
    mesh = np.meshgrid(*coords, indexing="ij")
    P = np.stack([m for m in mesh], axis=-1)
    sel = np.linalg.norm(P - shift, axis=-1) <= radius
    return P[sel], sel


def lower_envelope_ratio(triplet, t, theta, L, confirm=True, **grid_kw):
    """inf over |x| <= theta L of p(t, x + t b_L) L^d with its witness."""
    d = triplet.dim
    shift = t * effective_drift(triplet, L)
    ext = 1.25 * theta * L + 2 * L
    radius = theta * L
    kw = dict(grid_kw)
    if d > 1 and _product_factors(triplet) is None and "n" not in kw and "oversample" not in kw:
        # trade window points for oversampling: a small certified window and a
        # long period keep the wrap-around of heavy tails below the inf
        kw["n"] = max(64, DEFAULT_POINTS[d] // 2)
        kw["oversample"] = MAX_TRANSFORM[d] // kw["n"]
    g = density_grid(triplet, t, extent=ext, center=shift, **kw)
    if g.factors is not None:
        # sample the disk (product law: evaluate factors)
        from ._special import direction_grid

        dirs = direction_grid(d, 256)
        rr = radius * np.linspace(0.0, 1.0, 65)
        pts = shift + (rr[:, None, None] * dirs[None]).reshape(-1, d)
        vals = g.evaluate(pts)
    else:
        pts, sel = _disk_points(g, radius, shift)
        vals = g.dense()[sel]
    j = int(np.argmin(vals))
    inf_val, where = float(vals[j]), pts[j]
    note = "grid"
    if d == 1 and confirm:
        # alias-free confirmation: direct quadrature at the disk ends and the
        # smallest grid nodes; values within the quadrature accuracy are zero
        order = np.argsort(vals)[:8]
        cand = [shift - radius, shift + radius] + [pts[i] for i in order]
        best = None
        for x in cand:
            try:
                v, err = density_point(triplet, t, x, return_error=True)
            except (QuadratureFailure, NotIntegrable):
                continue
            v = 0.0 if v <= err else v
            if best is None or v < best[0]:
                best = (v, np.asarray(x, float).reshape(1))
        if best is not None:
            inf_val, where = best
            note = "direct"
        else:
            note = "grid (direct quadrature did not converge)"
    elif d > 1 and confirm and g.factors is None and g.oversample[0] >= 2:
        # empirical aliasing: the same window with half the period
        kw2 = dict(kw, n=g.shape[0], oversample=g.oversample[0] // 2)
        g2 = density_grid(triplet, t, extent=ext, center=shift, **kw2)
        v2 = g2.dense()[sel][j]
        resolution = abs(v2 - inf_val)
        if inf_val <= resolution:
            inf_val = 0.0
        note = "grid, aliasing resolution checked"
    return inf_val * L**d, where, g, note


def verify_lower_envelope(triplet, t_grid, theta=5.0, variant="alpha-ge-1", minorant=None, a1=None,
                          a2=None, force=False, floor=0.01, reference_time=None, **grid_kw):
    """Shifted lower-envelope ratios inf_{|x|<=theta L} p(t, x + t b_L) L^d over t_grid.

    Pass iff every ratio exceeds ``floor`` times the ratio at ``reference_time``
    (default: the largest t in the grid) and stays positive.
    """
    pre = {}
    if not force:
        pre = check_lower_preconditions(triplet, variant, minorant, a1, a2)
    elif variant == "symmetric-minorant" and minorant is None:
        minorant = triplet
    scale = _lower_scale(triplet, variant, minorant)
    ts = list(t_grid)
    ratios, wit, notes = [], [], []
    for t in ts:
        L = scale(t)
        r, where, g, note = lower_envelope_ratio(triplet, t, theta, L, **grid_kw)
        ratios.append(r)
        wit.append({"t": float(t), "x": np.asarray(where).tolist(), "L": float(L),
                    "mass_error": g.mass_error})
        notes.append(note)
    t_ref = ts[int(np.argmax(ts))] if reference_time is None else reference_time
    if t_ref in ts:
        ref = ratios[ts.index(t_ref)]
    else:
        ref = lower_envelope_ratio(triplet, t_ref, theta, scale(t_ref), **grid_kw)[0]
    cert = EnvelopeCertificate(kind=f"lower/{variant}", t_grid=ts, ratios=ratios,
                               band=float(floor), verdict="pass")
    lo = int(np.argmin(ratios))
    if not (ratios[lo] > 0 and ratios[lo] > floor * ref):
        cert.verdict = "fail"
    cert.witness = wit[lo]
    cert.parameters = {"theta": theta, "variant": variant, "forced": bool(force),
                       "reference_time": t_ref, "reference_ratio": ref, "preconditions": pre}
    cert.notes = sorted(set(notes))
    return cert


def gradient_envelope_check(triplet, t_grid, band=1.5, **grid_kw):
    """sup |grad p(t, .)| [h^{-1}(1/t)]^{d+1} over t_grid, with the moment-integral bound."""
    d = triplet.dim
    ratios, bounds, wit = [], [], []
    for t in t_grid:
        g = density_grid(triplet, t, **grid_kw)
        vals = g.dense() if g.factors is None or np.prod(g.shape) <= MAX_DENSE else None
        if vals is None:
            raise MemoryError("gradient check needs a materialised grid")
        grads = np.gradient(vals, *g.spacing) if d > 1 else [np.gradient(vals, g.spacing[0])]
        mag = np.sqrt(sum(gr**2 for gr in grads))
        i = np.unravel_index(int(np.argmax(mag)), mag.shape)
        ratios.append(float(mag[i]) * g.scale ** (d + 1))
        wit.append([float(g.coordinates(k)[i[k]]) for k in range(d)])
        bounds.append(_moment_integral(triplet, t, 1) / (2 * np.pi) ** d * g.scale ** (d + 1))
    cert = EnvelopeCertificate(kind="gradient", t_grid=list(t_grid), ratios=ratios, band=band,
                               verdict="pass")
    if cert.spread > band or any(r > b * (1 + 1e-3) for r, b in zip(ratios, bounds)):
        cert.verdict = "fail"
    j = int(np.argmax(ratios))
    cert.witness = {"t": float(t_grid[j]), "x": wit[j]}
    cert.parameters = {"moment_bound": bounds}
    return cert


def _moment_integral(triplet, t, m):
    """int |z|^m exp(-t Re psi(z)) dz, via the conditions module quadrature."""
    from .conditions import exp_moment_integral

    return exp_moment_integral(CharExponent(triplet), ConcentrationFn(triplet), t, m)
