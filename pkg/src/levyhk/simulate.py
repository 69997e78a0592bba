"""Monte Carlo cross-checks: increment sampling, exit times, cone and half-line probabilities.

Increments of stable building blocks are drawn exactly (Chambers-Mallows-Stuck
for one-dimensional stable laws, sub-Gaussian mixtures for isotropic ones);
everything else goes through a compound-Poisson sampler for jumps of size at
least ``eps`` plus a Gaussian or drift-only substitute for the small jumps.

Random streams are Philox generators keyed by ``(seed, first path index)`` of
fixed-size path blocks, so results are bit-for-bit reproducible for a given
seed and path count whatever the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .concentration import ConcentrationFn
from .errors import CutoffTooCoarse, InvalidInput
from .measure import Cylindrical, RadialDensity, Sum, ZeroMeasure, _RayLeaf, effective_drift
from .profiles import PowerProfile
from ._special import stable_constant, sphere_area

POLICIES = ("gaussian-substitute", "drift-only")
SUBSTITUTE_RATIO = 4.0
BLOCK_PATHS = 2**14
Z95 = 1.959963984540054
EXIT_STEP_FRACTION = 1e-3
EXIT_HORIZON = 200.0


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling parameters.

    ``eps`` is the small-jump cutoff of the generic sampler; under
    ``gaussian-substitute`` the jumps below it are replaced by a Gaussian with
    the matching covariance, which is only admitted when
    sigma(eps)/eps >= 4 with sigma(eps)^2 = int_{|z|<eps} |z|^2 N(dz).
    Under ``drift-only`` they are dropped (they have mean zero under the
    1{|z|<1} compensation when eps <= 1), with mean-square error t sigma(eps)^2.
    """

    eps: float = 0.1
    policy: str = "gaussian-substitute"
    seed: int = 0
    paths: int = 100_000
    workers: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidInput("the small-jump cutoff eps must be positive")
        if self.policy not in POLICIES:
            raise InvalidInput(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if int(self.paths) < 1:
            raise InvalidInput("paths must be a positive integer")
        if int(self.seed) < 0:
            raise InvalidInput("seed must be non-negative")

    def to_dict(self):
        """Parameters that determine the results (the worker count does not)."""
        out = asdict(self)
        out.pop("workers")
        return out


def block_rng(seed, start, stream=0):
    """The Philox generator of the path block beginning at path index ``start``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream), int(start)])))


def _blocks(paths):
    return [(s, min(BLOCK_PATHS, paths - s)) for s in range(0, paths, BLOCK_PATHS)]


def _map_blocks(fn, cfg, stream=0):
    """Run ``fn(rng, n)`` over the path blocks and concatenate in block order."""
    jobs = _blocks(int(cfg.paths))

    def run(job):
        start, n = job
        return fn(block_rng(cfg.seed, start, stream), n)

    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# one-dimensional stable laws (Samorodnitsky-Taqqu parametrisation)
# ---------------------------------------------------------------------------
def standard_stable(rng, n, alpha, beta=0.0):
    """Draws of S_alpha(1, beta, 0) by the Chambers-Mallows-Stuck method."""
    V = rng.uniform(-np.pi / 2, np.pi / 2, n)
    W = rng.standard_exponential(n)
    if alpha == 1.0:
        h = np.pi / 2 + beta * V
        return (2 / np.pi) * (h * np.tan(V) - beta * np.log((np.pi / 2) * W * np.cos(V) / h))
    if beta == 0.0:
        return (np.sin(alpha * V) / np.cos(V) ** (1 / alpha)
                * (np.cos((1 - alpha) * V) / W) ** ((1 - alpha) / alpha))
    tan = np.tan(np.pi * alpha / 2)
    B = np.arctan(beta * tan) / alpha
    S = (1 + beta**2 * tan**2) ** (1 / (2 * alpha))
    return (S * np.sin(alpha * (V + B)) / np.cos(V) ** (1 / alpha)
            * (np.cos(V - alpha * (V + B)) / W) ** ((1 - alpha) / alpha))


def stable(rng, n, alpha, sigma, beta=0.0, mu=0.0):
    """Draws of S_alpha(sigma, beta, mu)."""
    z = standard_stable(rng, n, alpha, beta)
    if alpha == 1.0:
        return sigma * z + (2 / np.pi) * beta * sigma * np.log(sigma) + mu
    return sigma * z + mu


def positive_stable(rng, n, beta):
    """Draws of S >= 0 with E exp(-u S) = exp(-u^beta), 0 < beta < 1."""
    return stable(rng, n, beta, np.cos(np.pi * beta / 2) ** (1 / beta), beta=1.0)


# ---------------------------------------------------------------------------
# exact samplers for the building blocks
# ---------------------------------------------------------------------------
def _ray_sampler(direction, weight, alpha):
    """Jumps ``weight r^{-1-alpha} dr`` along the unit vector ``direction``."""

    def draw(rng, n, t):
        W = t * weight
        if alpha == 1.0:
            x = stable(rng, n, 1.0, W * np.pi / 2, beta=1.0, mu=W * (1 - np.euler_gamma))
        else:
            sigma = (-W * special.gamma(-alpha) * np.cos(np.pi * alpha / 2)) ** (1 / alpha)
            x = stable(rng, n, alpha, sigma, beta=1.0, mu=W / (alpha - 1))
        return x[:, None] * direction[None, :]

    return draw


def _isotropic_sampler(d, scale, alpha):
    """Rotationally invariant law with Re psi = scale |x|^alpha."""

    def draw(rng, n, t):
        s = (t * scale) ** (1 / alpha)
        if d == 1:
            return stable(rng, n, alpha, s)[:, None]
        g = rng.standard_normal((n, d))
        if alpha == 2.0:
            return s * g
        a = positive_stable(rng, n, alpha / 2)
        return s * np.sqrt(2 * a)[:, None] * g

    return draw


def _embed(draw, k, d):
    def out(rng, n, t):
        x = np.zeros((n, d))
        x[:, k] = draw(rng, n, t)[:, 0]
        return x

    return out


def _exact_samplers(N):
    """Split N into exactly sampled pieces and a list of residual measures."""
    if isinstance(N, ZeroMeasure):
        return [], []
    if isinstance(N, Sum):
        ex, rest = [], []
        for term in N.terms:
            e, r = _exact_samplers(term)
            ex += e
            rest += r
        return ex, rest
    if isinstance(N, Cylindrical):
        ex = []
        for k, axis in N._each():
            e, r = _exact_samplers(axis)
            if r:
                return [], [N]
            ex += [_embed(f, k, N.dim) for f in e]
        return ex, []
    prof = getattr(N, "profile", None)
    if not (isinstance(prof, PowerProfile) and prof.is_power):
        return [], [N]
    if isinstance(N, RadialDensity):
        coef = prof.c / sphere_area(N.dim)
        return [_isotropic_sampler(N.dim, coef / stable_constant(N.dim, prof.alpha), prof.alpha)], []
    if isinstance(N, _RayLeaf) and np.all(N.rlo == 0) and np.all(np.isinf(N.rhi)):
        ex = []
        for xi, w, s in zip(N.directions, N.weights, N.scales):
            if w > 0:
                u = xi * s
                ex.append(_ray_sampler(u / np.linalg.norm(u), w * prof.c * np.linalg.norm(u) ** prof.alpha,
                                       prof.alpha))
        return ex, []
    return [], [N]


def _gaussian_factor(A):
    """L with L L^T = 2A."""
    lam, V = np.linalg.eigh(A)
    return V * np.sqrt(2 * np.clip(lam, 0, None))[None, :]


def _generic_sampler(M, cfg):
    """Compound Poisson for jumps >= eps plus the small-jump substitute of M."""
    eps = float(cfg.eps)
    d = M.dim
    sigma2 = M.truncated_second_moment(eps)
    L = None
    if cfg.policy == "gaussian-substitute" and sigma2 > 0:
        ratio = np.sqrt(sigma2) / eps
        if ratio < SUBSTITUTE_RATIO:
            raise CutoffTooCoarse(
                f"sigma(eps)/eps = {ratio:.3g} < {SUBSTITUTE_RATIO:g} at eps = {eps:g}; lower eps or use "
                "the drift-only policy")
        L = _gaussian_factor(0.5 * np.asarray(M.second_moment_matrix(0.0, eps), float))
    if eps < 1:
        comp = -np.asarray(M.first_moment_vector(eps, 1.0), float)
    else:
        comp = np.asarray(M.first_moment_vector(1.0, eps), float)
    pieces = list(M.pieces(eps))

    def draw(rng, n, t):
        x = np.tile(t * comp, (n, 1))
        for p in pieces:
            counts = rng.poisson(p.rate * t, n)
            total = int(counts.sum())
            if total:
                jumps = p.draw(rng, total)
                owner = np.repeat(np.arange(n), counts)
                for k in range(d):
                    x[:, k] += np.bincount(owner, weights=jumps[:, k], minlength=n)
        if L is not None:
            x += np.sqrt(t) * rng.standard_normal((n, d)) @ L.T
        return x

    return draw


class IncrementSampler:
    """Sampler of Y_t for a triplet: exact Gaussian, exact stable blocks, generic remainder."""

    def __init__(self, triplet, cfg=None):
        self.triplet = triplet
        self.cfg = cfg or SamplerConfig()
        self.dim = triplet.dim
        self.gauss = _gaussian_factor(triplet.A.entries) if triplet.A.norm > 0 else None
        exact, rest = _exact_samplers(triplet.N)
        self.exact = exact
        self.generic = [_generic_sampler(M, self.cfg) for M in rest]
        self.b = np.array(triplet.b, float)

    @property
    def is_exact(self):
        return not self.generic

    def __call__(self, rng, n, t):
        x = np.tile(t * self.b, (n, 1))
        if self.gauss is not None:
            x += np.sqrt(t) * rng.standard_normal((n, self.dim)) @ self.gauss.T
        for f in self.exact:
            x += f(rng, n, t)
        for f in self.generic:
            x += f(rng, n, t)
        return x


def sample_increment(triplet, time, cfg=None):
    """``cfg.paths`` independent draws of Y_time as an array of shape (paths, d)."""
    if not time > 0:
        raise InvalidInput("time must be positive")
    cfg = cfg or SamplerConfig()
    sampler = IncrementSampler(triplet, cfg)
    return _map_blocks(lambda rng, n: sampler(rng, n, float(time)), cfg)


def empirical_cf_check(triplet, time, cfg=None, freqs=None, samples=None):
    """Empirical characteristic function against exp(-t psi) at 16 frequencies.

    Returns (max deviation, tolerance 4/sqrt(paths)).
    """
    from .exponent import CharExponent

    cfg = cfg or SamplerConfig()
    d = triplet.dim
    if freqs is None:
        rng = np.random.default_rng(12345)
        g = rng.standard_normal((16, d))
        freqs = g / np.linalg.norm(g, axis=1, keepdims=True) * np.geomspace(0.1, 3.0, 16)[:, None]
    freqs = np.asarray(freqs, float)
    X = sample_increment(triplet, time, cfg) if samples is None else samples
    conc = ConcentrationFn(triplet)
    freqs = freqs / conc.inverse(1.0 / time)
    ecf = np.array([np.mean(np.exp(1j * (X @ f))) for f in freqs])
    exact = np.exp(-time * CharExponent(triplet).psi(freqs))
    return float(np.max(np.abs(ecf - exact))), 4.0 / np.sqrt(len(X))


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------
@dataclass
class Estimate:
    """A Monte Carlo mean with its 95% normal confidence interval."""

    value: float
    half_width: float
    paths: int
    extra: dict = field(default_factory=dict)

    @property
    def ci(self):
        return (self.value - self.half_width, self.value + self.half_width)

    def to_dict(self):
        out = {"estimate": self.value, "ci": list(self.ci), "half_width": self.half_width, "paths": self.paths}
        out.update(self.extra)
        return out


def _mean_ci(values):
    values = np.asarray(values, float)
    n = len(values)
    m = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return m, float(Z95 * sd / np.sqrt(n))


def _proportion(hits):
    hits = np.asarray(hits, bool)
    n = len(hits)
    p = float(np.mean(hits))
    return p, float(Z95 * np.sqrt(p * (1 - p) / n))


def _bridge_cross(z0, z1, r, var):
    """Probability that a Brownian bridge between inside points leaves the ball of radius r.

    Exact for one side of an interval; in d = 1 both sides are added, in
    d >= 2 the sphere is replaced by its tangent plane at the nearer endpoint.
    """
    if z0.shape[1] == 1:
        a, b = z0[:, 0], z1[:, 0]
        with np.errstate(under="ignore"):
            p = np.exp(-2 * (r - a) * (r - b) / var[:, 0]) + np.exp(-2 * (r + a) * (r + b) / var[:, 0])
        return np.minimum(p, 1.0)
    d0 = r - np.linalg.norm(z0, axis=1)
    d1 = r - np.linalg.norm(z1, axis=1)
    with np.errstate(under="ignore"):
        return np.exp(-2 * d0 * d1 / var[:, 0])


def exit_time(triplet, r, cfg=None, step_fraction=EXIT_STEP_FRACTION, horizon=EXIT_HORIZON):
    """E[S(r)] with S(r) = inf{t : |Y_t - t b_r| > r}, and E[S(r)] h(r).

    The time step is ``step_fraction / h(r)`` (at most 0.01/h(r)).  With a
    Gaussian part, crossings between grid times are detected by the
    Brownian-bridge probability of the Gaussian component, and the exit time
    is recorded at the middle of the step in which it happens.  Paths still
    inside after ``horizon / h(r)`` are counted as censored at the horizon.
    """
    if not r > 0:
        raise InvalidInput("r must be positive")
    if not 0 < step_fraction <= 0.01:
        raise InvalidInput("step_fraction must lie in (0, 0.01]")
    cfg = cfg or SamplerConfig()
    conc = ConcentrationFn(triplet)
    hr = conc.h(r)
    dt = step_fraction / hr
    steps = int(np.ceil(horizon / step_fraction))
    sampler = IncrementSampler(triplet, cfg)
    drift = dt * np.asarray(effective_drift(triplet, r), float)
    d = triplet.dim
    A = triplet.A.entries
    bridge = triplet.A.norm > 0

    def run(rng, n):
        z = np.zeros((n, d))
        alive = np.arange(n)
        out = np.full(n, steps * dt)
        for k in range(steps):
            if not len(alive):
                break
            z0 = z[alive]
            z1 = z0 + sampler(rng, len(alive), dt) - drift
            gone = np.einsum("ij,ij->i", z1, z1) > r * r
            if bridge:
                inside = ~gone
                u = z1[inside]
                nu = np.linalg.norm(u, axis=1, keepdims=True)
                u = np.where(nu > 0, u / np.where(nu > 0, nu, 1.0), 1.0 / np.sqrt(d))
                var = 2 * dt * np.einsum("ij,jk,ik->i", u, A, u)[:, None]
                p = _bridge_cross(z0[inside], z1[inside], r, var)
                hit = rng.uniform(size=len(p)) < p
                gone[np.flatnonzero(inside)[hit]] = True
            out[alive[gone]] = (k + 0.5) * dt
            z[alive] = z1
            alive = alive[~gone]
        return np.column_stack([out, np.isin(np.arange(n), alive)])

    res = _map_blocks(run, cfg, stream=1)
    times, censored = res[:, 0], res[:, 1].astype(bool)
    m, hw = _mean_ci(times)
    return Estimate(m * hr, hw * hr, len(times),
                    {"r": float(r), "h": hr, "mean_exit_time": m, "mean_exit_time_half_width": hw,
                     "step": dt, "censored": int(censored.sum()), "exact_increments": sampler.is_exact})


def _rotation(d, rotation):
    if rotation is None:
        return np.eye(d)
    O = np.asarray(rotation, float).reshape(d, d)
    if not np.allclose(O.T @ O, np.eye(d), atol=1e-10):
        raise InvalidInput("rotation must be an orthogonal matrix")
    return O


def random_rotation(d, seed=0):
    """A Haar-distributed orthogonal matrix."""
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, d)))
    return q * np.sign(np.diag(r))[None, :]


def cone_probability(triplet, time, lam, rotation=None, cfg=None):
    """P(Y_time in O C_lam) with C_lam = {x : x_d > lam |x~|}, x~ the first d-1 coordinates."""
    if triplet.dim < 2:
        raise InvalidInput("cones need d >= 2")
    if not lam >= 0:
        raise InvalidInput("lambda must be non-negative")
    cfg = cfg or SamplerConfig()
    O = _rotation(triplet.dim, rotation)
    sampler = IncrementSampler(triplet, cfg)

    def run(rng, n):
        y = sampler(rng, n, float(time)) @ O
        return y[:, -1] > lam * np.linalg.norm(y[:, :-1], axis=1)

    p, hw = _proportion(_map_blocks(run, cfg, stream=2))
    return Estimate(p, hw, int(cfg.paths), {"time": float(time), "lambda": float(lam)})


def cone_audit(triplet, lam, times, rotation=None, cfg=None):
    """inf over the times of (estimate - CI half-width); positive means the cone is hit uniformly."""
    ests = [cone_probability(triplet, t, lam, rotation, cfg) for t in times]
    lows = [e.value - e.half_width for e in ests]
    i = int(np.argmin(lows))
    return {"times": [float(t) for t in times], "estimates": [e.value for e in ests],
            "half_widths": [e.half_width for e in ests], "inf_lower": lows[i], "argmin_time": float(times[i]),
            "passed": bool(lows[i] > 0)}


def half_line_probability(triplet, time, cfg=None, cross_check=True):
    """P(Y_time < 0) for d = 1, cross-checked against direct quadrature and the density grid.

    ``gil_pelaez`` is P(Y < 0) from the distribution-function inversion.  The
    grid only covers a finite window [a, b), so ``grid_mass`` is the grid's
    P(a <= Y < 0) and ``window_estimate`` the Monte Carlo value of the same
    probability from the same samples.
    """
    if triplet.dim != 1:
        raise InvalidInput("half_line_probability is one-dimensional")
    cfg = cfg or SamplerConfig()
    sampler = IncrementSampler(triplet, cfg)
    y = _map_blocks(lambda rng, n: sampler(rng, n, float(time))[:, 0], cfg, stream=3)
    p, hw = _proportion(y < 0)
    extra = {"time": float(time)}
    if cross_check:
        from .density import cdf_point, density_grid

        extra["gil_pelaez"] = cdf_point(triplet, time, 0.0)
        g = density_grid(triplet, time)
        x = g.axes[0]
        w = np.where(x < 0, 1.0, np.where(x == 0, 0.5, 0.0))
        a = float(x[0] - 0.5 * g.spacing[0])
        pw, hww = _proportion((y >= a) & (y < 0))
        extra.update({"grid_mass": float(np.sum(g.values * w) * g.cell_volume), "grid_left_edge": a,
                      "window_estimate": pw, "window_half_width": hww})
    return Estimate(p, hw, int(cfg.paths), extra)
