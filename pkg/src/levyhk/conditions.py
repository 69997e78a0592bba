"""Numerical audits of the scaling windows (A)/(B) and the equivalence families
(C1)-(C8), (D1)-(D4).

"There is a constant" is operationalised on a finite audit lattice.  A ratio
series that must stay bounded fails when its spread exceeds ``CEILING`` or
when it is still drifting (faster than ``EDGE_SLOPE`` per octave) over the
last ``EDGE_POINTS`` lattice points towards the limit; a ratio that must stay
away from zero fails below ``FLOOR`` or under the mirrored drift rule.
Verdicts are therefore lattice-relative and the reports say so.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from ._special import direction_grid, sphere_area
from .concentration import ConcentrationFn
from .errors import InconsistentVerdicts, LevyError, NoScaling
from .exponent import CharExponent
from .measure import project_measure

FLOOR = 1e-4
CEILING = 1e6
EDGE_POINTS = 6
EDGE_SLOPE = 0.05
EDGE_DECAY = 0.6
SMALL_TIMES = [2.0**-k for k in range(0, 21)]
LARGE_TIMES = [2.0**k for k in range(0, 11)]
SCALING_STEPS = 20
LATTICE_NOTE = "verdict relative to the documented audit lattice"


def default_directions(d):
    """Directions for the (C)/(D) checks: +-1, or the +-axes plus 256 equi-angular (d=2) / 1024 Fibonacci (d=3)."""
    if d == 1:
        return direction_grid(1, 2)
    axes = np.vstack([np.eye(d), -np.eye(d)])
    return np.vstack([axes, direction_grid(d, 256 if d == 2 else 1024)])


@dataclass
class ScalingWindow:
    kind: str  # "A1" (lower scaling at zero) or "B1" (upper scaling at infinity)
    alpha: float
    constant: float
    theta: float
    fit: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "constant": self.constant,
                "theta": _num(self.theta), "fit": _jsonable(self.fit)}


@dataclass
class ConditionReport:
    condition: str
    verdict: str
    constants: dict = field(default_factory=dict)
    witness: list = field(default_factory=list)
    lattice: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {"condition": self.condition, "verdict": self.verdict,
                "constants": _jsonable(self.constants), "witness": _jsonable(self.witness),
                "lattice": _jsonable(self.lattice), "notes": list(self.notes)}


def _num(x):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    if np.isnan(x):
        return "nan"
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# verdict rules
# ---------------------------------------------------------------------------
def edge_slope(series, octaves_per_step=1.0):
    """Least-squares slope of log2(series) per octave over the last EDGE_POINTS entries."""
    s = np.asarray(series, float)[-EDGE_POINTS:]
    if len(s) < 2 or np.any(s <= 0) or not np.all(np.isfinite(s)):
        return np.inf
    x = np.arange(len(s)) * octaves_per_step
    return float(np.polyfit(x, np.log2(s), 1)[0])


def _drifting(series, octaves_per_step):
    """(drifting, slope): slope above EDGE_SLOPE that is not decaying geometrically.

    A bounded ratio converging like r^-eps still has a positive edge slope, but
    the slopes of the two halves of the edge window shrink by a fixed factor;
    power or logarithmic growth keeps them comparable.
    """
    slope = edge_slope(series, octaves_per_step)
    if not slope > EDGE_SLOPE:
        return False, slope
    if not np.isfinite(slope):
        return True, slope
    s = np.asarray(series, float)[-EDGE_POINTS:]
    half = len(s) // 2
    x = np.arange(len(s)) * octaves_per_step
    s1 = np.polyfit(x[:half + 1], np.log2(s[:half + 1]), 1)[0]
    s2 = np.polyfit(x[half:], np.log2(s[half:]), 1)[0]
    return not (s1 > 0 and s2 < EDGE_DECAY * s1), slope


def bounded_above(series, octaves_per_step=1.0):
    """(ok, reason) for a positive ratio series ordered towards the limit."""
    s = np.asarray(series, float)
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        return False, "non-finite or non-positive ratio"
    spread = s.max() / s.min()
    if spread > CEILING:
        return False, f"ratio spread {spread:.3g} exceeds the ceiling {CEILING:g}"
    drift, slope = _drifting(s, octaves_per_step)
    if drift:
        return False, f"ratio still grows at the lattice edge ({slope:.3f} per octave)"
    return True, f"spread {spread:.3g}, edge slope {slope:.3g} per octave"


def bounded_below(series, octaves_per_step=1.0, floor=FLOOR):
    s = np.asarray(series, float)
    if not np.all(np.isfinite(s)):
        return False, "non-finite ratio"
    if s.min() < floor:
        return False, f"ratio {s.min():.3g} falls below the floor {floor:g}"
    drift, slope = _drifting(1.0 / s, octaves_per_step)
    if drift:
        return False, f"ratio still decays at the lattice edge ({slope:.3f} per octave)"
    return True, f"minimum {s.min():.3g}, edge slope {-slope:.3g} per octave"


def _report(cid, ok, reason, constants, witness, lattice, notes=()):
    return ConditionReport(condition=cid, verdict="pass" if ok else "fail", constants=constants,
                           witness=witness, lattice=lattice, notes=[LATTICE_NOTE, reason, *notes])


def _inconclusive(cid, exc):
    return ConditionReport(condition=cid, verdict="inconclusive",
                           notes=[f"{type(exc).__name__}: {exc}"])


# ---------------------------------------------------------------------------
# scaling windows
# ---------------------------------------------------------------------------
def _scaling_radii(kind, theta):
    lam = 2.0 ** -np.arange(0, SCALING_STEPS + 1)
    if kind == "A1":
        r0 = 2.0**10 if not np.isfinite(theta) else theta * (1 - 1e-12)
        return r0 * lam
    r0 = 2.0**-10 if theta <= 0 else theta * (1 + 1e-12)
    return r0 / lam


def _pair_ratios(values, alpha, kind):
    """Per lambda step j: worst ratio of the scaling inequality over lattice pairs.

    A1 (radii decreasing): h(r_i) / (lambda^alpha h(r_{i+j})), lambda = 2^-j.
    B1 (radii increasing): lambda^alpha h(r_{i+j}) / h(r_i), lambda = 2^j.
    """
    v = np.asarray(values, float)
    n = len(v)
    out = np.empty(n)
    out[0] = 1.0
    for j in range(1, n):
        if kind == "A1":
            q = v[:-j] / (2.0 ** (-j * alpha) * v[j:])
        else:
            q = 2.0 ** (j * alpha) * v[j:] / v[:-j]
        out[j] = q.max()
    return out


def _edge_exponents(radii, values, kind, theta):
    """Local decay exponents of log h at the unbounded ends of the window.

    A lower scaling exponent cannot exceed the local exponent in a direction
    where the window is unbounded, otherwise the inequality degrades without
    bound beyond the lattice.  (A1) is always unbounded towards r = 0 and also
    towards infinity when theta = inf; (B1) is always unbounded towards infinity
    and also towards zero when theta = 0.
    """
    lr, lv = np.log(radii), np.log(values)
    near = -np.polyfit(lr[:EDGE_POINTS], lv[:EDGE_POINTS], 1)[0]  # at radii[0]
    far = -np.polyfit(lr[-EDGE_POINTS:], lv[-EDGE_POINTS:], 1)[0]  # at radii[-1]
    out = {"limit": float(far)}
    if (kind == "A1" and not np.isfinite(theta)) or (kind == "B1" and theta <= 0):
        out["start"] = float(near)
    return out


def estimate_scaling(c, kind="A1", theta=np.inf, values=None, label="h"):
    """Fit alpha by least squares on log h over the dyadic lambda lattice; constant = max ratio.

    The least-squares exponent is capped by the local exponents at the
    unbounded ends of the window, so that a window mixing two power regimes
    reports the exponent valid in both.  ``values`` may supply another
    decreasing function (K) on the same radii.
    """
    if kind not in ("A1", "B1"):
        raise ValueError("kind must be 'A1' or 'B1'")
    radii = _scaling_radii(kind, theta)
    vals = np.array([c.h(r) for r in radii]) if values is None else np.array([values(r) for r in radii])
    lsq = float(-np.polyfit(np.log(radii), np.log(vals), 1)[0])
    edges = _edge_exponents(radii, vals, kind, theta)
    alpha = float(min(lsq, *edges.values(), 2.0))
    if not alpha > 0:
        raise NoScaling(f"fitted exponent {alpha:.3g} <= 0 for {label}")
    worst = _pair_ratios(vals, alpha, kind)
    if kind == "A1":
        const = float(max(1.0, worst.max()))
        if const > CEILING:
            raise NoScaling(f"scaling constant {const:.3g} exceeds {CEILING:g}")
    else:
        const = float(min(1.0, 1.0 / worst.max()))
        if 1.0 / const > CEILING:
            raise NoScaling(f"scaling constant {const:.3g} below {1 / CEILING:g}")
    return ScalingWindow(kind=kind, alpha=alpha, constant=const, theta=float(theta),
                         fit={"radii": radii, "worst_by_step": worst, "values": vals, "label": label,
                              "lsq_alpha": lsq, "edge_alpha": edges})


def stretch_window(window, c, R):
    """Extend an (A1) window from theta to R > theta: constant times (R/theta)^2."""
    if window.kind != "A1":
        raise ValueError("window stretching applies to (A1)")
    if not R > window.theta:
        raise ValueError("R must exceed theta")
    const = window.constant * (R / window.theta) ** 2
    return ScalingWindow(kind="A1", alpha=window.alpha, constant=const, theta=float(R),
                         fit={"stretched_from": window.theta, "slack": (R / window.theta) ** 2})


def _window_values(window, c):
    """Radii and h values of a window, recomputed when the window was supplied by hand."""
    fit = window.fit
    if "radii" in fit and "values" in fit and "stretched_from" not in fit:
        return fit["radii"], fit["values"]
    radii = _scaling_radii(window.kind, window.theta)
    return radii, np.array([c.h(r) for r in radii])


def _scaling_report(cid, window, kind, c):
    """Verify a window: bounded pair ratios, the stated constant, and the edge exponents."""
    radii, vals = _window_values(window, c)
    worst = _pair_ratios(vals, window.alpha, kind)
    ok, why = bounded_above(worst[1:])
    notes = []
    if kind == "A1":
        within = worst.max() <= window.constant * (1 + 1e-9)
    else:
        within = 1.0 / worst.max() >= window.constant * (1 - 1e-9)
    if not within:
        ok = False
        notes.append(f"observed ratio {worst.max():.4g} violates the stated constant {window.constant:.4g}")
    edges = _edge_exponents(radii, vals, kind, window.theta)
    low = min(edges.values())
    if window.alpha > low + EDGE_SLOPE:
        ok = False
        notes.append(f"alpha = {window.alpha:.4g} exceeds the local exponent {low:.4g} at an unbounded end "
                     f"of the window; the ratio grows like lambda^-{window.alpha - low:.3g} beyond the lattice")
    return _report(cid, ok, why, {"alpha": window.alpha, "constant": window.constant,
                                  "theta": window.theta, "edge_alpha": edges},
                   [{"lambda_step": int(np.argmax(worst)), "ratio": float(worst.max())}],
                   {"radii": radii}, notes)


def _try_scaling(c, kind, theta, values=None, label="h"):
    try:
        return estimate_scaling(c, kind, theta, values=values, label=label), None
    except NoScaling as exc:
        return None, exc


def _psi_star_lattice(e, radii):
    return e.psi_star_report(np.asarray(radii, float)).values


def check_A_family(c, window=None, e=None, theta=None):
    """(A1)-(A5) at zero with the cross-constant predictions."""
    if window is None:
        window, exc = _try_scaling(c, "A1", np.inf if theta is None else theta)
        if window is None:
            return [ConditionReport(f"A{i}", "fail", notes=[str(exc)]) for i in range(1, 6)]
    if window.kind != "A1":
        raise ValueError("check_A_family needs an (A1) window")
    e = CharExponent(c.triplet) if e is None else e
    d = c.triplet.dim
    cd = 16.0 * (1 + 2 * d)
    alpha, C, theta = window.alpha, window.constant, window.theta
    radii, hv = _window_values(window, c)
    reports = [_scaling_report("A1", window, "A1", c)]

    # (A2) on u = h(r_i), lambda = 2^j
    worst = []
    for j in range(1, len(radii)):
        r_lo = radii[j:]
        lam = hv[j:] / hv[:-j]
        lhs = radii[:-j]
        rhs = (C * lam) ** (1 / alpha) * r_lo
        worst.append(float(np.max(lhs / rhs)))
    ok = max(worst) <= 1 + 1e-6
    reports.append(_report("A2", ok, f"max h^-1 ratio {max(worst):.6g} (must be <= 1)",
                           {"alpha": alpha, "constant": C}, [{"max_ratio": max(worst)}],
                           {"radii": radii}))

    # (A3) on psi*, radii 1/r ascending
    lat3 = 1.0 / radii
    ps = _psi_star_lattice(e, lat3)
    q = []
    for j in range(1, len(lat3)):
        q.append(float(np.min(ps[j:] / (2.0 ** (j * alpha) * ps[:-j]))))
    obs = float(min(1.0, min(q)))
    pred = 1.0 / (cd * C)
    ok, why = bounded_below(q)
    ok = ok and obs >= pred / 2.0
    reports.append(_report("A3", ok, why, {"observed": obs, "predicted": pred, "alpha": alpha},
                           [{"lambda_step": int(np.argmin(q)) + 1, "ratio": min(q)}], {"radii": lat3},
                           [f"predicted constant 1/(c_d C_h) = {pred:.4g}; observed {obs:.4g}"]))

    # (A4)
    hk = np.array([c.h(r) / c.K(r) for r in radii])
    ok, why = bounded_above(hk)
    cobs = float(hk.max())
    pred_alpha = 2.0 / cobs
    a1_from_a4 = _pair_ratios(hv, pred_alpha, "A1").max()
    reports.append(_report("A4", ok, why, {"c": cobs, "predicted_alpha": pred_alpha,
                                           "A1_ratio_with_predicted": float(a1_from_a4)},
                           [{"r": float(radii[int(np.argmax(hk))]), "ratio": cobs}], {"radii": radii},
                           ["(A4) predicts (A1) with alpha = 2/c and C = 1"]))

    # (A5) on K
    kv = np.array([c.K(r) for r in radii])
    w5 = _pair_ratios(kv, alpha, "A1")
    ok, why = bounded_above(w5[1:])
    c5 = float(w5.max())
    theta_pred = c.inverse(2.0 * c.h(theta)) if np.isfinite(theta) else np.inf
    sel = radii < theta_pred
    check = _pair_ratios(hv[sel], alpha, "A1").max() / max(c5, 1.0) if sel.sum() > 1 else 0.0
    reports.append(_report("A5", ok, why, {"c": c5, "predicted_theta": theta_pred,
                                           "A1_ratio_over_c": float(check)},
                           [{"lambda_step": int(np.argmax(w5)), "ratio": c5}], {"radii": radii},
                           ["(A5) predicts (A1) with C_h = c on r < h^-1(2 h(theta))"]))
    return reports


def check_B_family(c, window=None, e=None, theta=None):
    """(B1)-(B5) at infinity with the cross-constant predictions."""
    if window is None:
        window, exc = _try_scaling(c, "B1", 1.0 if theta is None else theta)
        if window is None:
            return [ConditionReport(f"B{i}", "fail", notes=[str(exc)]) for i in range(1, 6)]
    if window.kind != "B1":
        raise ValueError("check_B_family needs a (B1) window")
    e = CharExponent(c.triplet) if e is None else e
    d = c.triplet.dim
    cd = 16.0 * (1 + 2 * d)
    alpha, ch, theta = window.alpha, window.constant, window.theta
    radii, hv = _window_values(window, c)
    reports = [_scaling_report("B1", window, "B1", c)]

    worst = []
    for j in range(1, len(radii)):
        lam = hv[j:] / hv[:-j]  # lambda <= 1, u = h(r_i)
        lhs = (ch * lam) ** (1 / alpha) * radii[j:]
        worst.append(float(np.max(lhs / radii[:-j])))
    ok = max(worst) <= 1 + 1e-6
    reports.append(_report("B2", ok, f"max h^-1 ratio {max(worst):.6g} (must be <= 1)",
                           {"alpha": alpha, "constant": ch}, [{"max_ratio": max(worst)}],
                           {"radii": radii}))

    lat3 = 1.0 / radii[::-1]
    ps = _psi_star_lattice(e, lat3)
    q = []
    for j in range(1, len(lat3)):
        q.append(float(np.max(ps[:-j] / (2.0 ** (-j * alpha) * ps[j:]))))
    obs = float(max(1.0, max(q)))
    pred = cd / ch
    ok, why = bounded_above(q)
    ok = ok and obs <= 2.0 * pred
    reports.append(_report("B3", ok, why, {"observed": obs, "predicted": pred, "alpha": alpha},
                           [{"lambda_step": int(np.argmax(q)) + 1, "ratio": max(q)}], {"radii": lat3},
                           [f"predicted constant c_d/c_h = {pred:.4g}; observed {obs:.4g}"]))

    hk = np.array([c.h(r) / c.K(r) for r in radii])
    ok, why = bounded_above(hk)
    cobs = float(hk.max())
    reports.append(_report("B4", ok, why, {"c": cobs, "predicted_alpha": 2.0 / cobs},
                           [{"r": float(radii[int(np.argmax(hk))]), "ratio": cobs}], {"radii": radii},
                           ["(B4) predicts (B1) with alpha = 2/c and c_h = 1"]))

    kv = np.array([c.K(r) for r in radii])
    w5 = _pair_ratios(kv, alpha, "B1")
    ok, why = bounded_above(w5[1:])
    reports.append(_report("B5", ok, why, {"c": float(1.0 / w5.max())},
                           [{"lambda_step": int(np.argmax(w5)), "ratio": float(w5.max())}],
                           {"radii": radii}, ["(B5) predicts (B1) with c_h = c"]))
    return reports


# ---------------------------------------------------------------------------
# integrals of exp(-t Re psi)
# ---------------------------------------------------------------------------
_GL_NODES, _GL_WEIGHTS = roots_legendre(8)


def _sphere_rule(d):
    """Equal-weight sphere rule (the axes are probe points only, not quadrature nodes)."""
    dirs = direction_grid(d, 2 if d == 1 else (256 if d == 2 else 1024))
    w = np.full(len(dirs), sphere_area(d) / len(dirs)) if d > 1 else np.ones(2)
    return dirs, w


WHITEN_STEPS = 8
WHITEN_TOL = 1e-3


def _radial_integrals(e, t, S, dirs, powers, octaves):
    """Per direction u: int_0^inf r^(p+d-1) exp(-t Re psi(S r u)) dr for each p in ``powers``.

    The radius runs over log r in [-octaves, top] octaves with an 8-point
    Gauss-Legendre rule per octave; the top is raised until t Re psi >= 40 in
    every probed direction.
    """
    d = e.dim
    ln2 = np.log(2.0)
    lo, hi = -octaves * ln2, octaves * ln2
    axes = dirs @ S.T
    while True:
        top = t * e.re_psi(np.exp(hi) * axes)
        if top.min() >= 40.0 or hi > 400 * ln2:
            break
        hi += 8 * ln2
    if top.min() < 40.0:
        raise LevyError("exp(-t Re psi) does not decay within the frequency range probed")
    edges = np.arange(lo, hi + 1e-12, ln2)
    a, b = edges[:-1], edges[1:]
    u = ((0.5 * (b - a))[:, None] * _GL_NODES[None] + (0.5 * (a + b))[:, None]).ravel()
    wu = np.repeat(0.5 * (b - a), len(_GL_NODES)) * np.tile(_GL_WEIGHTS, len(a))
    r = np.exp(u)
    out = np.zeros((len(powers), len(dirs)))
    step = max(1, 2**18 // len(dirs))
    for s0 in range(0, len(r), step):
        rs = r[s0:s0 + step]
        pts = (rs[:, None, None] * axes[None]).reshape(-1, d)
        f = np.exp(-t * e.re_psi(pts)).reshape(len(rs), len(dirs))
        for k, p in enumerate(powers):
            out[k] += (rs ** (p + d) * wu[s0:s0 + step]) @ f
    return out


def _whitening(e, t, rho, octaves):
    """Linear map S with z = S w making the measure exp(-t Re psi(z)) dz roughly isotropic in w.

    Starting from S = rho I, S is replaced by S M^(1/2), where M averages
    (int r^(d+1) f dr / int r^(d-1) f dr) u u^T over the probe directions u,
    until M is the identity to WHITEN_TOL.  Normalising per direction keeps a
    single needle direction from swamping the others.  The coordinate
    axes are probed alongside the sphere grid so that needle-shaped level sets
    aligned with an axis are seen in the first step.
    """
    d = e.dim
    S = rho * np.eye(d)
    if d == 1:
        return S
    dirs, _ = _sphere_rule(d)
    probes = np.vstack([dirs, np.eye(d), -np.eye(d)])
    for _ in range(WHITEN_STEPS):
        m0, m2 = _radial_integrals(e, t, S, probes, (0, 2), octaves)
        shape = (probes.T * (m2 / m0)) @ probes / len(probes)
        shape = 0.5 * (shape + shape.T)
        vals, vecs = np.linalg.eigh(shape)
        vals = np.maximum(vals, vals.max() * 1e-300)
        if np.all(np.abs(vals - 1.0) < WHITEN_TOL):
            break
        S = S @ (vecs * np.sqrt(vals)) @ vecs.T
    return S


def exp_moment_integral(e, c, t, m=0, octaves=40):
    """int |z|^m exp(-t Re psi(z)) dz in polar coordinates after a whitening change of variables.

    With z = S w the integral is |det S| int |S w|^m exp(-t Re psi(S w)) dw; the
    whitening keeps strongly anisotropic level sets (scaling exponents that
    differ between axes) resolvable by a fixed sphere grid at every t.
    """
    d = e.dim
    dirs, wdir = _sphere_rule(d)
    rho = 1.0 / c.inverse(1.0 / t)
    S = _whitening(e, t, rho, octaves)
    radial = _radial_integrals(e, t, S, dirs, (m,), octaves)[0]
    stretch = np.linalg.norm(dirs @ S.T, axis=1) ** m
    return float(abs(np.linalg.det(S)) * np.sum(wdir * stretch * radial))


def _integral_series(e, c, t_grid, m):
    d = e.dim
    ratios = []
    for t in t_grid:
        val = exp_moment_integral(e, c, t, m)
        ratios.append(val * c.inverse(1.0 / t) ** (d + m))
    return np.array(ratios)


def _octaves(grid):
    g = np.asarray(grid, float)
    return float(abs(np.log2(g[1] / g[0]))) if len(g) > 1 else 1.0


def check_C2(e, c, t_grid=None, cid="C2"):
    ts = SMALL_TIMES if t_grid is None else list(t_grid)
    ts = sorted(ts, reverse=cid.startswith("C"))
    try:
        ratios = _integral_series(e, c, ts, 0)
    except LevyError as exc:
        return _inconclusive(cid, exc)
    ok, why = bounded_above(ratios, _octaves(ts))
    i = int(np.argmax(ratios))
    return _report(cid, ok, why, {"c2": float(ratios.max())},
                   [{"t": ts[i], "ratio": float(ratios[i])}], {"t": ts, "ratios": ratios})


def check_C5(e, c, m=1, t_grid=None, cid="C5"):
    if m == 0:
        rep = check_C2(e, c, t_grid, cid=cid)
        rep.constants["m"] = 0
        return rep
    if m not in (1, 2):
        raise ValueError("m must be 0, 1 or 2")
    ts = SMALL_TIMES if t_grid is None else list(t_grid)
    ts = sorted(ts, reverse=cid.startswith("C"))
    try:
        ratios = _integral_series(e, c, ts, m)
    except LevyError as exc:
        return _inconclusive(cid, exc)
    ok, why = bounded_above(ratios, _octaves(ts))
    i = int(np.argmax(ratios))
    return _report(cid, ok, why, {"c5": float(ratios.max()), "m": m},
                   [{"t": ts[i], "ratio": float(ratios[i])}], {"t": ts, "ratios": ratios})


def _radius_lattice(T, small):
    if small:  # |x| > 1/T, towards infinity
        return (1.0 / T) * 2.0 ** np.arange(0, 21)
    return (1.0 / T) * 2.0 ** -np.arange(1, 22)  # |x| < 1/T, towards zero


def check_C3(e, c=None, T3=1.0, cid="C3", small=True, directions=None):
    """c3 = inf Re psi(x)/psi*(|x|) over directions x radii, plus the WLSC constant of psi*."""
    d = e.dim
    radii = _radius_lattice(T3, small)
    dirs = default_directions(d) if directions is None else directions
    ps = e.psi_star_report(radii).values
    pts = (radii[:, None, None] * dirs[None]).reshape(-1, d)
    re = e.re_psi(pts).reshape(len(radii), len(dirs))
    q = re.min(axis=1) / ps
    jmin = np.argmin(re, axis=1)
    slope = np.polyfit(np.log(radii), np.log(ps), 1)[0]
    alpha3 = float(np.clip(slope, 1e-12, 2.0))
    # WLSC of psi*: psi*(lam r) >= c lam^alpha psi*(r) for lam >= 1 within the radius window
    up = np.argsort(radii)
    ru, pu = radii[up], ps[up]
    wl = [float(np.min(pu[j:] / ((ru[j:] / ru[:-j]) ** alpha3 * pu[:-j]))) for j in range(1, len(ru))]
    cw = float(min(1.0, min(wl)))
    ok1, why1 = bounded_below(q)
    ok2 = cw >= FLOOR
    i = int(np.argmin(q))
    c3 = float(min(q.min(), cw))
    return _report(cid, ok1 and ok2, why1 + f"; WLSC constant {cw:.4g} with alpha {alpha3:.4g}",
                   {"c3": c3, "alpha3": alpha3, "ratio_inf": float(q.min()), "wlsc": cw, "T3": T3},
                   [{"x": (radii[i] * dirs[jmin[i]]).tolist(), "ratio": float(q[i])}],
                   {"radii": radii, "directions": len(dirs), "psi_star": ps})


def check_C4(e, T4=1.0, cid="C4", small=True, directions=None):
    """c4 = sup psi*(|x|) / (<x,Ax> + int_{|<x,z>|<1} <x,z>^2 N) over directions x radii."""
    d = e.dim
    radii = _radius_lattice(T4, small)
    dirs = default_directions(d) if directions is None else directions
    if d == 1:
        dirs = dirs[:1]  # the quadratic form is even in x
    ps = e.psi_star_report(radii).values
    q = np.empty((len(radii), len(dirs)))
    for j, v in enumerate(dirs):
        q[:, j] = ps / e.quadratic_form_along(v, radii)
    series = q.max(axis=1)
    ok, why = bounded_above(series)
    i = int(np.argmax(series))
    j = int(np.argmax(q[i]))
    return _report(cid, ok, why, {"c4": float(series.max()), "T4": T4},
                   [{"x": (radii[i] * dirs[j]).tolist(), "ratio": float(series[i])}],
                   {"radii": radii, "directions": len(dirs)})


def check_C1(triplet, c, t_grid=None, cid="C1", **grid_kw):
    """sup p(t, .) [h^{-1}(1/t)]^d bounded, with normalised FFT inversion as the existence test."""
    from .density import sup_density

    ts = SMALL_TIMES[::2] if t_grid is None else list(t_grid)
    ts = sorted(ts, reverse=cid.startswith("C"))
    d = triplet.dim
    ratios, masses, where = [], [], []
    try:
        for t in ts:
            s = sup_density(triplet, t, check_symmetry=False, **grid_kw)
            ratios.append(s.value * s.scale**d)
            masses.append(s.grid.mass_error)
            where.append(s.location.tolist())
    except (LevyError, MemoryError) as exc:
        return _inconclusive(cid, exc)
    ratios = np.array(ratios)
    exists = max(masses) <= 1e-4
    ok, why = bounded_above(ratios, _octaves(ts))
    notes = [f"density existence test: max mass error {max(masses):.3g} (<= 1e-4 required)"]
    i = int(np.argmax(ratios))
    return _report(cid, ok and exists, why, {"c1": float(ratios.max())},
                   [{"t": ts[i], "x": where[i], "ratio": float(ratios[i])}],
                   {"t": ts, "ratios": ratios, "mass_error": masses}, notes)


def check_C8(triplet, c, direction_count=None, T8=1.0):
    """sup_r h(r)/h_1(r) over projections plus (A1) for h on r < T8."""
    d = triplet.dim
    n = max(2 * d, direction_count or (2 * d if d == 1 else 16 * d))
    dirs = np.vstack([np.eye(d), direction_grid(d, n)]) if d > 1 else np.array([[1.0], [-1.0]])
    radii = T8 * 2.0 ** -np.arange(1, 22)
    hv = np.array([c.h(r) for r in radii])
    worst, series_all = None, []
    ok = True
    why = ""
    for v in dirs:
        c1 = ConcentrationFn(project_measure(triplet, v / np.linalg.norm(v)))
        s = hv / np.array([c1.h(r) for r in radii])
        series_all.append(s)
        good, reason = bounded_above(s)
        if worst is None or s.max() > worst[1]:
            worst = (v, float(s.max()), float(radii[int(np.argmax(s))]))
        if not good and ok:
            ok, why = False, f"direction {np.round(v, 4).tolist()}: {reason}"
    window, exc = _try_scaling(c, "A1", T8)
    a1_ok = window is not None and _scaling_report("A1", window, "A1", c).passed
    if ok:
        why = "h/h_1 bounded for every sampled direction"
    if not a1_ok:
        why += "; (A1) for h fails on r < T8"
    consts = {"c8": float(max(s.max() for s in series_all)), "directions": len(dirs), "T8": T8}
    if window is not None:
        consts.update({"alpha8": window.alpha, "scaling_constant": window.constant})
    return _report("C8", ok and a1_ok, why, consts,
                   [{"direction": worst[0].tolist(), "r": worst[2], "ratio": worst[1]}],
                   {"radii": radii})


def check_D_family(e, c, t_grid_large=None, T=1.0, triplet=None, **grid_kw):
    """Large-time counterparts: D1 (density), D2 (integral), D3, D4 (small |x|) and integrability."""
    ts = LARGE_TIMES if t_grid_large is None else list(t_grid_large)
    ts = sorted(ts)
    trip = c.triplet if triplet is None else triplet
    reports = []
    reports.append(check_C1(trip, c, ts[::2] if t_grid_large is None else ts, cid="D1", **grid_kw))
    reports.append(check_C2(e, c, ts, cid="D2"))
    try:
        t0 = float(T)
        integ = exp_moment_integral(e, c, t0, 0)
        integ_ok = bool(np.isfinite(integ))
    except LevyError as exc:
        integ, integ_ok = np.nan, False
        reports.append(_inconclusive("D0", exc))
    d3 = check_C3(e, c, T3=T, cid="D3", small=False)
    d4 = check_C4(e, T4=T, cid="D4", small=False)
    for rep in (d3, d4):
        rep.constants["integral_t0"] = integ
        rep.notes.append(f"exp(-t0 Re psi) integrable at t0 = {T:g}: {integ_ok}")
        if not integ_ok:
            rep.verdict = "fail"
    reports += [d3, d4]
    return reports


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------
SMALL_FAMILY = ("C1", "C2", "C3", "C4", "C5", "C8")
LARGE_FAMILY = ("D1", "D2", "D3", "D4")


@dataclass
class AuditReport:
    reports: dict
    scaling: dict
    shortcuts: list
    consistent: bool
    family_verdicts: dict

    def to_dict(self):
        return {"consistent": self.consistent, "family_verdicts": self.family_verdicts,
                "conditions": {k: v.to_dict() for k, v in self.reports.items()},
                "scaling": {k: [r.to_dict() for r in v] for k, v in self.scaling.items()},
                "shortcuts": list(self.shortcuts)}

    def raise_if_inconsistent(self):
        if not self.consistent:
            raise InconsistentVerdicts(f"mixed verdicts within a family: {self.family_verdicts}")

    @property
    def exit_code(self):
        """0 when every family passes, 1 when a family fails consistently, 3 when undecided."""
        verdicts = set(self.family_verdicts.values())
        if not self.consistent or "inconclusive" in verdicts:
            return 3
        return 0 if verdicts <= {"pass"} else 1


def _is_rotation_invariant(triplet):
    from .measure import RadialDensity, ZeroMeasure

    A = triplet.A.entries
    iso_A = np.allclose(A, A[0, 0] * np.eye(triplet.dim))
    return iso_A and isinstance(triplet.N, (RadialDensity, ZeroMeasure)) and not np.any(triplet.b)


def audit(triplet, T=1.0, workers=1, small_times=None, large_times=None, include=None):
    """Run C1-C5, C8 and D1-D4 and check verdict consistency within each family."""
    e = CharExponent(triplet)
    c = ConcentrationFn(triplet)
    jobs = {
        "C1": lambda: check_C1(triplet, c, small_times[::2] if small_times else None),
        "C2": lambda: check_C2(e, c, small_times),
        "C3": lambda: check_C3(e, c, T3=T),
        "C4": lambda: check_C4(e, T4=T),
        "C5": lambda: check_C5(e, c, 1, small_times),
        "C8": lambda: check_C8(triplet, c, T8=T),
        "D": lambda: check_D_family(e, c, large_times, T=T, triplet=triplet),
        "A": lambda: check_A_family(c, e=e),
        "B": lambda: check_B_family(c, e=e),
    }
    if include is not None:
        jobs = {k: v for k, v in jobs.items() if k in include}

    def run(item):
        key, fn = item
        try:
            return key, fn()
        except LevyError as exc:
            return key, _inconclusive(key, exc)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(run, jobs.items()))
    else:
        results = dict(map(run, jobs.items()))
    reports, scaling = {}, {}
    for key in sorted(results):
        val = results[key]
        if key in ("A", "B"):
            scaling[key] = val if isinstance(val, list) else [val]
        elif key == "D":
            for r in (val if isinstance(val, list) else [val]):
                reports[r.condition] = r
        else:
            reports[key] = val
    fam = {}
    consistent = True
    for name, members in (("small_time", SMALL_FAMILY), ("large_time", LARGE_FAMILY)):
        verdicts = {reports[m].verdict for m in members if m in reports}
        if not verdicts:
            continue
        if len(verdicts) == 1:
            fam[name] = verdicts.pop()
        else:
            fam[name] = "mixed"
            consistent = False
    shortcuts = []
    if triplet.dim == 1:
        shortcuts.append("d = 1: (C1)-(C4) are tantamount to (A1)-(A4) for h; (C8) is automatic")
    if _is_rotation_invariant(triplet):
        shortcuts.append("rotationally invariant: (C1)-(C4) are tantamount to (A1)-(A4); (C4) lightens to (A4)")
    return AuditReport(reports=reports, scaling=scaling, shortcuts=shortcuts, consistent=consistent,
                       family_verdicts=fam)
