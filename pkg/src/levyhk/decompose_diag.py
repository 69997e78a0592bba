"""Diagnostics for the class X(T, a, r) built from the decomposition N = N_1 + N_2.

A member is the law of ``(Z^{2.lam}_t - t b^{2.lam}_lam) / lam + y`` with
``lam = a h_nu^{-1}(1/t)``, ``|y| <= r`` and ``lam < T``, where Z^{2.lam}
carries the jumps ``(a1/2) nu`` restricted to the ball B_lam.  Members are
affine images of Z^{2.lam}_t, so masses are computed from density grids of
Z^{2.lam}_t after a change of variables.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv, roots_legendre

from ._special import direction_grid, sphere_area
from .concentration import ConcentrationFn
from .conditions import exp_moment_integral
from .density import density_grid
from .errors import MembershipViolated, MinorizationViolated, NotIntegrable, QuadratureFailure
from .exponent import CharExponent
from .measure import GeneratingTriplet, LevyMeasure, decompose_levy, effective_drift

PROBE_TIMES = [2.0**-k for k in range(2, 18)]  # a0 calibration lattice (every fourth entry)
PROBE_SHIFTS = 8
PROBE_SEED = 0
CALIBRATION_TARGET = 0.5
MAX_DOUBLINGS = 20
SPECTRAL_ATOL = 1e-6


def _as_triplet(nu, d):
    if isinstance(nu, GeneratingTriplet):
        return nu
    if isinstance(nu, LevyMeasure):
        return GeneratingTriplet(np.zeros((d, d)), nu, np.zeros(d), check=False)
    raise TypeError("nu must be a GeneratingTriplet or a LevyMeasure")


def lambda_threshold(c_nu, t, a0=1.0):
    """lam = a0 h_nu^{-1}(1/t)."""
    if not t > 0:
        raise ValueError("t must be positive")
    if not a0 >= 1:
        raise ValueError("a0 must be at least 1")
    return a0 * c_nu.inverse(1.0 / t)


@dataclass
class ClassXMember:
    base: GeneratingTriplet
    nu: GeneratingTriplet
    a1: float
    t: float
    a: float
    lam: float
    y: np.ndarray
    r: float
    T: float
    z1: GeneratingTriplet = field(repr=False)
    z2: GeneratingTriplet = field(repr=False)
    drift2: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.base.dim

    @property
    def shift(self):
        """Centre of Z^{2.lam}_t that corresponds to the origin of the member law."""
        return self.t * self.drift2 - self.lam * self.y

    def psi(self, X):
        """Member exponent -i<x, y - t b^{2.lam}_lam / lam> + t psi_{2.lam}(x / lam)."""
        X = np.atleast_2d(np.asarray(X, float))
        e2 = CharExponent(self.z2)
        lin = X @ (self.y - self.t * self.drift2 / self.lam)
        return -1j * lin + self.t * e2.psi(X / self.lam)

    def char_function(self, X):
        return np.exp(-self.psi(X))

    def ball_mass(self, radius, **grid_kw):
        """(mu(B_radius), method) from a density grid of Z^{2.lam}_t, or spectrally."""
        masses, method = _ball_masses([self], radius, **grid_kw)
        return masses[0], method


def _ball_masses(members, radius, **grid_kw):
    """Ball masses of members sharing (base, t, lam).

    One density grid of Z^{2.lam}_t serves every shift.  When no certified
    window fits the grid caps, the spectral ball formula is used instead.
    """
    try:
        return _ball_masses_grid(members, radius, **grid_kw), "grid"
    except NotIntegrable:
        return _ball_masses_spectral(members, radius), "spectral"


def _ball_masses_spectral(members, radius, atol=SPECTRAL_ATOL):
    """mu(B_rho) = (2 pi)^-d int (2 pi rho/s)^{d/2} J_{d/2}(rho s) Re exp(-Psi(xi)) dxi in polar form."""
    m0 = members[0]
    d = m0.dim
    rho = float(radius)
    base = ClassXMember(**{**m0.__dict__, "y": np.zeros(d)})
    shifts = np.array([m.y for m in members])

    def ring(n_dir):
        if d == 1:
            return np.array([[1.0], [-1.0]]), np.ones(2)
        dirs = direction_grid(d, n_dir)
        return dirs, np.full(len(dirs), sphere_area(d) / len(dirs))

    dirs, _ = ring(256)
    smax = 1.0
    while np.min(base.psi(smax * dirs).real) < 40.0:
        smax *= 2.0
        if smax > 1e12:
            raise QuadratureFailure("member characteristic function does not decay", achieved=np.nan)
    g, w = roots_legendre(16)

    def value(width, n_dir):
        dirs, wd = ring(n_dir)
        edges = np.append(np.arange(0.0, smax, width), smax)
        a, b = edges[:-1], edges[1:]
        sr = ((0.5 * (b - a))[:, None] * g + (0.5 * (a + b))[:, None]).ravel()
        ws = ((0.5 * (b - a))[:, None] * w).ravel()
        kern = (2 * np.pi * rho / sr) ** (d / 2) * jv(d / 2, rho * sr) * sr ** (d - 1)
        out = np.zeros(len(shifts))
        step = max(1, 2**18 // len(dirs))
        for i0 in range(0, len(sr), step):
            ss = sr[i0:i0 + step]
            X = (ss[:, None, None] * dirs[None]).reshape(-1, d)
            phi0 = np.exp(-base.psi(X))
            for k, y in enumerate(shifts):
                # shifting by y multiplies the transform by exp(i<x, y>)
                f = (phi0 * np.exp(1j * (X @ y))).real.reshape(len(ss), len(dirs))
                out[k] += float((f @ wd * kern[i0:i0 + step]) @ ws[i0:i0 + step])
        return out / (2 * np.pi) ** d

    width = 2 * np.pi / max(rho, 1.0 / smax)
    v1 = value(width, 256)
    v2 = value(width / 2, 256)
    err = float(np.max(np.abs(v1 - v2)))
    if err > atol:
        raise QuadratureFailure("spectral ball mass did not converge", achieved=err)
    return [float(np.clip(v, 0.0, 1.0)) for v in v2]


def _ball_masses_grid(members, radius, **grid_kw):
    m0 = members[0]
    d = m0.dim
    rho = m0.lam * radius
    centre = m0.t * m0.drift2
    reach = max(np.linalg.norm(m.lam * m.y) for m in members)
    if d > 1:
        grid_kw.setdefault("n", 64)  # the certification loop doubles it as needed
    # the window only has to contain the shifted balls; jumps of Z^{2.lam} are below lam
    g = density_grid(m0.z2, m0.t, center=centre, extent=rho + reach + 0.25 * m0.lam, **grid_kw)
    P = np.stack(np.meshgrid(*[g.coordinates(k) for k in range(d)], indexing="ij"), axis=-1)
    vals = g.dense()
    out = []
    for m in members:
        inside = np.linalg.norm(P - m.shift, axis=-1) < rho
        out.append(float(vals[inside].sum() * g.cell_volume))
    return out


def classx_member(base, nu, a1, t, a, y, r=1.0, T=1.0):
    """Construct a member of X(T, a, r); MembershipViolated unless |y| <= r, lam < T and a1 nu <= N."""
    d = base.dim
    nu = _as_triplet(nu, d)
    y = np.asarray(y, float).reshape(d)
    if np.linalg.norm(y) > r * (1 + 1e-12):
        raise MembershipViolated(f"|y| = {np.linalg.norm(y):.4g} exceeds r = {r:g}")
    lam = lambda_threshold(ConcentrationFn(nu), t, a)
    if not lam < T:
        raise MembershipViolated(f"lambda = {lam:.4g} is not below T = {T:g}")
    try:
        z1, z2 = decompose_levy(base, nu.N, a1, lam)
    except MinorizationViolated as exc:
        raise MembershipViolated(f"minorization a1 nu <= N fails: {exc}") from exc
    drift2 = effective_drift(z2, lam)
    return ClassXMember(base=base, nu=nu, a1=float(a1), t=float(t), a=float(a), lam=float(lam), y=y,
                        r=float(r), T=float(T), z1=z1, z2=z2, drift2=drift2)


@dataclass
class TailBound:
    observed: float
    bound: float
    constant: float
    fitted: bool
    R: float

    @property
    def holds(self):
        return self.observed <= self.bound * (1 + 1e-12)


def classx_tail_bound(m, R, constant=None, **grid_kw):
    """mu(B_R^c) against constant (a1/2)/(R - r)^2.

    Without ``constant`` the smallest admissible constant for this member is
    fitted and flagged; pass a constant fitted over a family to test it.
    """
    if not R > 1 + m.r:
        raise ValueError("R must exceed 1 + r")
    mass, _ = m.ball_mass(R, **grid_kw)
    observed = max(0.0, 1.0 - mass)
    shape = (m.a1 / 2.0) / (R - m.r) ** 2
    fitted = constant is None
    if fitted:
        constant = observed / shape
    return TailBound(observed=observed, bound=constant * shape, constant=float(constant), fitted=fitted,
                     R=float(R))


def classx_char_integral(m):
    """int |mu^(z)| dz = lam^d int exp(-t Re psi_{2.lam}(w)) dw."""
    e2 = CharExponent(m.z2)
    c2 = ConcentrationFn(m.z2)
    return m.lam ** m.dim * exp_moment_integral(e2, c2, m.t, 0)


def classx_ball_mass(m, r1=1.0, **grid_kw):
    """mu(B_{r1}) by integrating the member density."""
    if not r1 > 0:
        raise ValueError("r1 must be positive")
    return m.ball_mass(r1, **grid_kw)[0]


def probe_shifts(d, r=1.0, n=PROBE_SHIFTS, seed=PROBE_SEED):
    """y = 0 plus n - 1 random shifts with |y| <= r (uniform directions, radii r u^{1/d})."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n - 1, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = r * rng.random(n - 1) ** (1.0 / d)
    return np.vstack([np.zeros(d), v * rad[:, None]])


def probe_times(c_nu, a, T=1.0, n=16):
    """The n largest dyadic t <= 1 with a h_nu^{-1}(1/t) < T."""
    out, k = [], 0
    while len(out) < n and k < 200:
        t = 2.0**-k
        if lambda_threshold(c_nu, t, a) < T:
            out.append(t)
        k += 1
    return out


def probe_members(base, nu, a1, a, r=1.0, T=1.0, times=None, shifts=None):
    """Members over the probe lattice (16 dyadic t x 8 shifts); those with lam >= T are skipped."""
    if times is None:
        times = probe_times(ConcentrationFn(_as_triplet(nu, base.dim)), a, T)
    shifts = probe_shifts(base.dim, r) if shifts is None else shifts
    out, skipped = [], []
    for t in times:
        for y in shifts:
            try:
                out.append(classx_member(base, nu, a1, t, a, y, r=r, T=T))
            except MembershipViolated as exc:
                if "lambda" not in str(exc):
                    raise
                skipped.append({"t": t, "y": np.asarray(y).tolist(), "reason": str(exc)})
    return out, skipped


def small_part_escape(base, nu, a1, t, a0, **grid_kw):
    """P(|Z^{1.lam}_t - t b^{1.lam}_lam| >= lam) for lam = a0 h_nu^{-1}(1/t)."""
    nu = _as_triplet(nu, base.dim)
    lam = lambda_threshold(ConcentrationFn(nu), t, a0)
    z1, _ = decompose_levy(base, nu.N, a1, lam)
    ctr = t * effective_drift(z1, lam)
    if base.dim > 1:
        grid_kw.setdefault("n", 64)
    g = density_grid(z1, t, center=ctr, extent=2.5 * lam, **grid_kw)
    P = np.stack(np.meshgrid(*[g.coordinates(k) for k in range(base.dim)], indexing="ij"), axis=-1)
    inside = np.linalg.norm(P - ctr, axis=-1) < lam
    return max(0.0, 1.0 - float(g.dense()[inside].sum() * g.cell_volume))


def calibrate_a0(base, nu, a1, times=None, a0=1.0, target=CALIBRATION_TARGET, **grid_kw):
    """Double a0 until P(|Z^{1.lam}_t - t b^{1.lam}_lam| >= lam) <= target on every t.

    The constant is an empirical calibration, reported as such.
    """
    times = PROBE_TIMES if times is None else times
    history = []
    for _ in range(MAX_DOUBLINGS):
        probs = [small_part_escape(base, nu, a1, t, a0, **grid_kw) for t in times]
        history.append({"a0": a0, "max_escape": max(probs)})
        if max(probs) <= target:
            return {"a0": a0, "escape": probs, "times": list(times), "history": history, "empirical": True}
        a0 *= 2.0
    raise MembershipViolated(f"no a0 <= {a0:g} brings the escape probability below {target}")


def decomposition_invariants(base, nu, a1, lam, a2=None, T3=1.0, directions=64):
    """Residuals and comparison ratios of the decomposition at level lam.

    Returns the additivity residual max|psi - psi_1 - psi_2| (relative), the
    extreme ratios Re psi_1 / ((a1/2) Re psi_nu) and Re psi_1 / Re psi on a
    (radius x direction) lattice, and h / h_nu below T3 (to compare with a1
    and a2 c_d).
    """
    from ._special import direction_grid

    d = base.dim
    nu = _as_triplet(nu, d)
    z1, z2 = decompose_levy(base, nu.N, a1, lam)
    e, e1, e2, en = (CharExponent(x) for x in (base, z1, z2, nu))
    dirs = direction_grid(d, directions if d > 1 else 2)
    radii = 2.0 ** np.arange(-10, 11)
    X = (radii[:, None, None] * dirs[None]).reshape(-1, d)
    p, p1, p2 = e.psi(X), e1.psi(X), e2.psi(X)
    resid = float(np.max(np.abs(p - p1 - p2) / np.maximum(np.abs(p), 1e-300)))
    lower = p1.real / (0.5 * a1 * en.re_psi(X))
    upper = p1.real / np.maximum(p.real, 1e-300)
    c, cn = ConcentrationFn(base), ConcentrationFn(nu)
    rr = T3 * 2.0 ** -np.arange(1, 21)
    hh = np.array([c.h(x) / cn.h(x) for x in rr])
    out = {"additivity_residual": resid, "lower_ratio_min": float(lower.min()),
           "upper_ratio_max": float(upper.max()), "h_ratio_min": float(hh.min()),
           "h_ratio_max": float(hh.max()), "a1": a1}
    if a2 is not None:
        out["h_upper_bound"] = a2 * 16.0 * (1 + 2 * d)
    return out


def diagnostics(base, nu, a1, a0=None, r=1.0, T=1.0, r1=1.0, times=None, shifts=None, tail_R=None):
    """Probe-lattice report: a0 calibration, char-integral band, ball-mass infimum, tail constant."""
    d = base.dim
    cal = None
    if a0 is None:
        cal = calibrate_a0(base, nu, a1, times=PROBE_TIMES[::4])
        a0 = cal["a0"]
    if times is None:
        times = probe_times(ConcentrationFn(_as_triplet(nu, d)), a0, T)
    members, skipped = probe_members(base, nu, a1, a0, r=r, T=T, times=times, shifts=shifts)
    chars = {}
    for m in members:
        if m.t not in chars:  # shifts do not change |mu^|
            chars[m.t] = classx_char_integral(m)
    masses, methods = [], set()
    for t in sorted({m.t for m in members}, reverse=True):
        vals, how = _ball_masses([m for m in members if m.t == t], r1)
        masses += vals
        methods.add(how)
    R = 2.0 * (1 + r) if tail_R is None else tail_R
    tails = [classx_tail_bound(m, R) for m in members[::4 * PROBE_SHIFTS]]
    cv = np.array(list(chars.values()))
    j = int(np.argmin(masses)) if masses else 0
    return {
        "a0": a0, "a0_calibration": cal, "lattice": {"times": list(times), "shifts": PROBE_SHIFTS,
                                                      "seed": PROBE_SEED, "r": r, "T": T},
        "members": len(members), "skipped": skipped,
        "char_integral": {"values": {str(k): v for k, v in chars.items()},
                          "band": float(cv.max() / cv.min()) if len(cv) else None},
        "ball_mass": {"r1": r1, "inf": float(min(masses)) if masses else None, "methods": sorted(methods),
                      "witness": {"t": members[j].t, "y": members[j].y.tolist()} if masses else None},
        "tail": {"R": R, "fitted_constant": float(max(tb.constant for tb in tails)) if tails else None,
                 "empirical": True},
        "invariants": decomposition_invariants(base, nu, a1, lambda_threshold(ConcentrationFn(
            _as_triplet(nu, d)), times[0], a0), T3=T),
    }
