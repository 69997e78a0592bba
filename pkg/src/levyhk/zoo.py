"""Named example processes with closed-form reference functions.

Members are addressed by ``name:p1,p2,...`` strings, e.g.
``product_stable:0.5,1.0,1.5``.  Each constructor returns a
:class:`~levyhk.measure.GeneratingTriplet` whose ``reference`` dict carries the
known exponent (and where available h) for oracle tests.
"""

import numpy as np
from scipy import special

from ._special import sphere_area, stable_constant
from .errors import BadParameter
from .measure import (
    Cylindrical,
    GeneratingTriplet,
    OneSidedDensity,
    RadialDensity,
    SphericalProduct,
    Sum,
    ZeroMeasure,
)
from .profiles import PowerProfile


def _alpha_ok(alpha, lo=0.0, hi=2.0):
    if not lo < alpha < hi:
        raise BadParameter(f"alpha = {alpha!r} outside ({lo}, {hi})")
    return float(alpha)


def _dim_ok(d):
    if int(d) != d or d < 1:
        raise BadParameter(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def symmetric_stable_1d(alpha, scale=1.0):
    """One-dimensional symmetric measure with Re psi(x) = scale * |x|^alpha."""
    c = stable_constant(1, alpha) * scale
    return RadialDensity(1, PowerProfile(2.0 * c, alpha))


def _stable_h(d_total_c, alpha):
    """h(r) for a measure whose radial law is c r^{-1-alpha}dr: c r^{-alpha}(1/alpha + 1/(2-alpha))."""
    return lambda r: d_total_c * np.asarray(r, float) ** (-alpha) * (1.0 / alpha + 1.0 / (2.0 - alpha))


def gaussian(d=1, a=0.5, drift=None):
    """Brownian motion with Gaussian matrix a*I (a = 1/2 is standard Brownian motion)."""
    d = _dim_ok(d)
    if not a > 0:
        raise BadParameter("Gaussian scale must be positive")
    A = a * np.eye(d)
    b = np.zeros(d) if drift is None else np.asarray(drift, float).reshape(d)
    ref = {
        "psi": lambda x: a * np.sum(np.atleast_2d(x) ** 2, axis=1) - 1j * (np.atleast_2d(x) @ b),
        "h": lambda r: a / np.asarray(r, float) ** 2,
        "family": "gaussian",
    }
    return GeneratingTriplet(A, ZeroMeasure(d), b, name=f"gaussian:{d},{a:g}", reference=ref)


def isotropic_stable(d=1, alpha=1.0):
    """Rotationally invariant alpha-stable process with Re psi(x) = |x|^alpha."""
    d = _dim_ok(d)
    alpha = _alpha_ok(alpha)
    c = stable_constant(d, alpha)
    N = RadialDensity.power(d, c, alpha)
    ref = {
        "psi": lambda x: np.linalg.norm(np.atleast_2d(x), axis=1) ** alpha + 0j,
        "h": _stable_h(c * sphere_area(d), alpha),
        "alpha": alpha,
        "family": "isotropic_stable",
    }
    return GeneratingTriplet(np.zeros((d, d)), N, np.zeros(d), name=f"isotropic_stable:{d},{alpha:g}",
                             reference=ref)


def cylindrical_stable(d=2, alpha=1.0):
    """Independent symmetric alpha-stable coordinates: Re psi(x) = sum_k |x_k|^alpha."""
    d = _dim_ok(d)
    alpha = _alpha_ok(alpha)
    N = Cylindrical([symmetric_stable_1d(alpha) for _ in range(d)])
    c = 2.0 * stable_constant(1, alpha)
    ref = {
        "psi": lambda x: np.sum(np.abs(np.atleast_2d(x)) ** alpha, axis=1) + 0j,
        "h": _stable_h(d * c, alpha),
        "alpha": alpha,
        "family": "cylindrical_stable",
    }
    return GeneratingTriplet(np.zeros((d, d)), N, np.zeros(d), name=f"cylindrical_stable:{d},{alpha:g}",
                             reference=ref)


def one_sided_1_stable():
    """d = 1, N(dx) = x^{-2} 1{x<0} dx, A = 0, b = 0."""
    N = OneSidedDensity(PowerProfile(1.0, 1.0), side=-1)

    def psi(x):
        x = np.atleast_2d(x)[:, 0]
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            im = np.where(ax > 0, x * (1.0 - np.euler_gamma - np.log(ax)), 0.0)
        # jumps point left, so the odd part changes sign
        return np.pi / 2 * ax + 1j * im

    ref = {"psi": psi, "h": lambda r: 2.0 / np.asarray(r, float), "alpha": 1.0, "family": "one_sided_1_stable"}
    return GeneratingTriplet(np.zeros((1, 1)), N, np.zeros(1), name="one_sided_1_stable", reference=ref)


def stable_subordinator(alpha=0.5):
    """Increasing alpha-stable process with Laplace exponent u^alpha.

    The drift is chosen so the triplet carries no linear term:
    psi(x) = (-ix)^alpha = |x|^alpha exp(-i pi alpha sgn(x) / 2).
    """
    alpha = _alpha_ok(alpha, 0.0, 1.0)
    c = alpha / special.gamma(1.0 - alpha)
    N = OneSidedDensity(PowerProfile(c, alpha), side=1)
    b = np.array([c / (1.0 - alpha)])
    ref = {
        "psi": lambda x: (-1j * np.atleast_2d(x)[:, 0] + 0j) ** alpha,
        "h": _stable_h(c, alpha),
        "alpha": alpha,
        "family": "stable_subordinator",
    }
    return GeneratingTriplet(np.zeros((1, 1)), N, b, name=f"stable_subordinator:{alpha:g}", reference=ref)


def product_stable(alpha1=0.5, alpha2=1.0, alpha3=1.5):
    """Three independent symmetric stable coordinates with different indices."""
    alphas = [_alpha_ok(a) for a in (alpha1, alpha2, alpha3)]
    N = Cylindrical([symmetric_stable_1d(a) for a in alphas])

    def psi(x):
        x = np.atleast_2d(x)
        return sum(np.abs(x[:, k]) ** a for k, a in enumerate(alphas)) + 0j

    ref = {"psi": psi, "alphas": alphas, "family": "product_stable"}
    name = "product_stable:" + ",".join(f"{a:g}" for a in alphas)
    return GeneratingTriplet(np.zeros((3, 3)), N, np.zeros(3), name=name, reference=ref)


def spherical_stable(d=2, alpha=1.0, directions=None, weights=None):
    """Stable measure with a finite atomic spectral measure: sum_i w_i int 1(r xi_i) r^{-1-alpha} dr."""
    d = _dim_ok(d)
    alpha = _alpha_ok(alpha)
    if directions is None:
        directions = _default_atoms(d)
    directions = np.asarray(directions, float).reshape(-1, d)
    weights = np.ones(len(directions)) if weights is None else np.asarray(weights, float)
    N = SphericalProduct(d, directions, weights, PowerProfile(1.0, alpha))
    xi = N.directions
    w = N.weights
    g_cos = _ray_cos_constant(alpha)

    def re_psi(x):
        return (np.abs(np.atleast_2d(x) @ xi.T) ** alpha) @ w * g_cos

    ref = {"re_psi": re_psi, "alpha": alpha, "family": "spherical_stable", "directions": xi, "weights": w}
    return GeneratingTriplet(np.zeros((d, d)), N, np.zeros(d), name=f"spherical_stable:{d},{alpha:g}",
                             reference=ref)


def _ray_cos_constant(alpha):
    """int_0^inf (1 - cos u) u^{-1-alpha} du."""
    if alpha == 1.0:
        return np.pi / 2
    return special.gamma(1.0 - alpha) * np.cos(np.pi * alpha / 2) / alpha


def _default_atoms(d):
    """Two off-axis unit directions used by the mixed example."""
    if d == 1:
        return np.array([[1.0]])
    base = np.zeros((2, d))
    base[0, :2] = [np.cos(np.pi / 6), np.sin(np.pi / 6)]
    base[1, :2] = [np.cos(3 * np.pi / 4), np.sin(3 * np.pi / 4)]
    if d > 2:
        base[:, 2:] = 0.25
        base /= np.linalg.norm(base, axis=1, keepdims=True)
    return base


def mixed_stable(d=2, alpha=1.0, directions=None, weights=None):
    """Cylindrical alpha-stable part plus a non-symmetric atomic spherical part.

    Since the cylindrical part is a lower bound of N and
    d^{-alpha/2}|x|^alpha <= Re psi(x) <= c|x|^alpha, this is the standard test
    case for lower bounds driven by a symmetric minorant.
    """
    cyl = cylindrical_stable(d, alpha)
    sph = spherical_stable(d, alpha, directions, weights)
    N = Sum([cyl.N, sph.N])
    g_re = sph.reference["re_psi"]
    ref = {
        "re_psi": lambda x: np.real(cyl.reference["psi"](x)) + g_re(x),
        "alpha": alpha,
        "family": "mixed_stable",
        "minorant": cyl,
    }
    return GeneratingTriplet(np.zeros((d, d)), N, np.zeros(d), name=f"mixed_stable:{d},{alpha:g}", reference=ref)


def gaussian_cauchy(a=0.5):
    """d = 1 Brownian part a*I plus symmetric Cauchy jumps."""
    N = symmetric_stable_1d(1.0)
    ref = {"psi": lambda x: a * np.atleast_2d(x)[:, 0] ** 2 + np.abs(np.atleast_2d(x)[:, 0]) + 0j,
           "family": "gaussian_cauchy"}
    return GeneratingTriplet(a * np.eye(1), N, np.zeros(1), name=f"gaussian_cauchy:{a:g}", reference=ref)


ZOO = {
    "gaussian": (gaussian, "d[,a]: Brownian motion with A = a I (default a = 1/2)"),
    "isotropic_stable": (isotropic_stable, "d,alpha: rotationally invariant alpha-stable"),
    "cylindrical_stable": (cylindrical_stable, "d,alpha: independent alpha-stable coordinates"),
    "one_sided_1_stable": (one_sided_1_stable, "(no parameters): N(dx) = x^-2 1{x<0} dx"),
    "stable_subordinator": (stable_subordinator, "alpha in (0,1): increasing alpha-stable"),
    "product_stable": (product_stable, "alpha1,alpha2,alpha3: independent coordinates, d = 3"),
    "spherical_stable": (spherical_stable, "d,alpha[,xi_1..xi_d,w]*: atomic spectral measure"),
}

ALIASES = {
    "cauchy": ("isotropic_stable", (1, 1.0)),
    "mixed_stable": None,
    "gaussian_cauchy": None,
}


def make_zoo(name, params=()):
    """Build a zoo member from its name and a parameter tuple."""
    params = tuple(float(p) for p in params)
    if name == "cauchy":
        d = int(params[0]) if params else 1
        return isotropic_stable(d, 1.0)
    if name == "mixed_stable":
        return _with_atoms(mixed_stable, params, default=(2, 1.0))
    if name == "gaussian_cauchy":
        return gaussian_cauchy(*params)
    if name not in ZOO:
        raise BadParameter(f"unknown zoo member {name!r}")
    if name == "spherical_stable":
        return _with_atoms(spherical_stable, params, default=(2, 1.0))
    fn = ZOO[name][0]
    if name in ("gaussian", "isotropic_stable", "cylindrical_stable") and params:
        params = (int(params[0]),) + params[1:]
    try:
        return fn(*params)
    except TypeError as exc:
        raise BadParameter(f"bad parameters for {name}: {exc}") from exc


def _with_atoms(fn, params, default):
    if not params:
        params = default
    d = int(params[0])
    alpha = params[1] if len(params) > 1 else default[1]
    rest = params[2:]
    if not rest:
        return fn(d, alpha)
    if len(rest) % (d + 1):
        raise BadParameter("atoms are given as d direction components followed by a weight")
    arr = np.asarray(rest).reshape(-1, d + 1)
    return fn(d, alpha, arr[:, :d], arr[:, d])


def parse_zoo(text):
    """Parse ``name`` or ``name:p1,p2,...`` into a triplet."""
    name, _, rest = text.partition(":")
    name = name.strip()
    try:
        params = [float(p) for p in rest.split(",") if p.strip()] if rest else []
    except ValueError as exc:
        raise BadParameter(f"cannot parse parameters in {text!r}") from exc
    return make_zoo(name, params)


def zoo_listing():
    lines = [f"{name:20s} {doc}" for name, (_, doc) in ZOO.items()]
    return lines
