"""Acceptance criteria 1-14 at their stated tolerances.

Each test records a one-line verdict that is printed after the run.  The two
criteria that contradict the closed forms of their own examples are marked
strict xfail and still assert the stated criterion; see the reasons.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from levyhk import conditions as C
from levyhk.concentration import ConcentrationFn
from levyhk.decompose_diag import diagnostics
from levyhk.density import (cdf_point, density_grid, dyadic_times, sup_density, verify_lower_envelope,
                            verify_upper_envelope)
from levyhk.exponent import CharExponent
from levyhk.simulate import (SamplerConfig, cone_audit, cone_probability, exit_time, half_line_probability,
                             random_rotation)
from levyhk.zoo import parse_zoo

pytestmark = pytest.mark.acceptance

ZOO = ["gaussian:1", "gaussian:2", "cauchy", "isotropic_stable:2,1.5", "isotropic_stable:3,0.7",
       "cylindrical_stable:2,1.0", "one_sided_1_stable", "stable_subordinator:0.5",
       "product_stable:0.5,1.0,1.5", "mixed_stable:2,1.0", "spherical_stable:2,0.8", "gaussian_cauchy"]
PRODUCT = "product_stable:0.5,1.0,1.5"
EXAMPLE = "mixed_stable:2,1.0"
MILLION = SamplerConfig(paths=10**6)


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)


def test_criterion_01_inversion():
    t0 = time.perf_counter()
    g = density_grid(parse_zoo("cauchy"), 1.0, n=2**14)
    x = g.coordinates(0)
    sel = np.abs(x) <= 10
    err = float(np.max(np.abs(g.values[sel] - 1 / (np.pi * (1 + x[sel] ** 2)))))
    cauchy_s = time.perf_counter() - t0
    worst = 0.0
    for d in (1, 2):
        for s in (0.25, 1.0, 4.0):
            p0 = density_grid(parse_zoo(f"gaussian:{d}"), s).evaluate([np.zeros(d)])[0]
            worst = max(worst, abs(p0 / (2 * np.pi * s) ** (-d / 2) - 1))
    ok = err <= 1e-6 and worst <= 1e-8 and cauchy_s < 1.0
    assert record("1", ok, f"Cauchy max abs error {err:.2e} in {cauchy_s:.2f} s; Gaussian p(t,0) rel {worst:.1e}")


def test_criterion_02_sandwich():
    radii = 2.0 ** np.linspace(-10, 10, 40)
    bad = []
    for name in ZOO:
        t = parse_zoo(name)
        ps, h = CharExponent(t).psi_star(radii), ConcentrationFn(t).h(1 / radii)
        low = 1 / (8 * (1 + 2 * t.dim))
        bad += [name for _ in range(int(np.sum((ps < low * h) | (ps > 2 * h))))]
    assert record("2", not bad, f"{len(bad)} violations over {len(ZOO)} members x 40 radii")


def test_criterion_03_calculus_identity():
    worst = 0.0
    rng = np.random.default_rng(2024)
    for name in ZOO:
        c = ConcentrationFn(parse_zoo(name))
        for _ in range(5):
            a, b = sorted(2.0 ** rng.uniform(-10, 10, 2))
            worst = max(worst, abs(c.calculus_residual(a, b)) / c.h(a))
    assert record("3", worst <= 1e-6, f"max residual / h(a) = {worst:.2e}")


def test_criterion_04_equivalence_audit():
    small = ("C1", "C2", "C3", "C4", "C5", "C8")
    passing = ["gaussian:1", "cauchy", "isotropic_stable:1,1.5", "cylindrical_stable:2,1.0", "one_sided_1_stable",
               "stable_subordinator:0.5", EXAMPLE]
    wrong, mixed = [], 0
    for name, want in [(n, "pass") for n in passing] + [(PRODUCT, "fail")]:
        rep = C.audit(parse_zoo(name), include=small)
        mixed += not rep.consistent
        wrong += [f"{name}:{k}" for k, r in rep.reports.items() if r.verdict != want]
    ok = not wrong and mixed == 0
    assert record("4", ok, f"{len(passing)} members pass, product fails; wrong verdicts {wrong or 'none'}, "
                           f"mixed families {mixed}")


def test_criterion_05_sup_slope():
    t = parse_zoo(PRODUCT)
    ts = [2.0**k for k in range(11)]
    slope = np.polyfit(np.log(ts), np.log([sup_density(t, s).value for s in ts]), 1)[0]
    want = -(1 / 0.5 + 1 / 1.0 + 1 / 1.5)
    assert record("5a", abs(slope - want) <= 0.05, f"sup p slope {slope:.4f} vs {want:.4f} over t in [1, 2^10]")


@pytest.mark.xfail(strict=True, reason="sup p(t) [h^-1(1/t)]^3 ~ t^(7/3) for product_stable: the D family fails")
def test_criterion_05_large_time_family():
    rep = C.audit(parse_zoo(PRODUCT), include=("D",))
    verdicts = {k: r.verdict for k, r in rep.reports.items()}
    d2 = rep.reports["D2"].lattice["ratios"]
    band = float(np.max(d2) / np.min(d2))
    ok = set(verdicts.values()) == {"pass"} and band <= 3.0
    assert record("5b", ok, f"D verdicts {verdicts}, D2 ratio band {band:.3g} (stated: all pass, band <= 3)")


@pytest.mark.parametrize("name", ["cauchy", "isotropic_stable:1,1.5"])
def test_criterion_06_upper_envelope(name):
    cert = verify_upper_envelope(parse_zoo(name), dyadic_times(2.0**-10, 1.0))
    r = np.array(cert.ratios)
    spread = float(r.max() / r.min())
    assert record(f"6 {name}", spread <= 1.5, f"ratio spread {spread:.4f} over t in [2^-10, 1]")


@pytest.mark.parametrize("theta", [1.0, 5.0, 20.0])
def test_criterion_07_lower_envelope(theta):
    t = parse_zoo(EXAMPLE)
    ts = dyadic_times(2.0**-8, 2.0**-2)
    cert = verify_lower_envelope(t, ts, theta=theta, variant="symmetric-minorant",
                                 minorant=t.reference["minorant"], a1=1.0, a2=4.0)
    r = np.array(cert.ratios)
    ref = r[ts.index(0.25)]
    ok = np.all(r > 0.01 * ref) and ref > 0
    assert record(f"7 theta={theta:g}", ok, f"inf ratio {r.min():.4g} vs 0.01 x {ref:.4g} at t = 1/4")


@pytest.mark.xfail(strict=True, reason="the 5 sigma inf is carried by single Cauchy jumps and decays like sqrt t")
def test_criterion_08_gaussian_lower_bound():
    cert = verify_lower_envelope(parse_zoo("gaussian_cauchy"), dyadic_times(2.0**-10, 1.0), theta=5.0,
                                 variant="gaussian")
    r = np.array(cert.ratios)
    spread = float(r.max() / r.min())
    ok = r.min() > 0 and spread <= 2.0
    assert record("8", ok, f"inf ratio in [{r.min():.3g}, {r.max():.3g}], spread {spread:.3g} (stated: <= 2)")


def test_criterion_09_subordinator_counterexample():
    t = parse_zoo("stable_subordinator:0.5")
    cert = verify_lower_envelope(t, [2.0**-4, 2.0**-6], theta=20.0, variant="symmetric-minorant", force=True)
    w = cert.witness
    left = cdf_point(t, w["t"], w["x"][0])
    ok = cert.verdict == "fail" and cert.min_ratio == 0.0 and left < 1e-6
    assert record("9", ok, f"verdict {cert.verdict}, witness x = {w['x'][0]:.4g} at t = {w['t']:g}, "
                           f"mass left of it {left:.1e}")


def test_criterion_10_exit_time():
    g = exit_time(parse_zoo("gaussian:1"), 1.0, SamplerConfig(paths=2 * 10**5))
    ok_g = g.ci[0] <= 0.5 <= g.ci[1]
    st = [exit_time(parse_zoo("isotropic_stable:1,1.5"), r, SamplerConfig(paths=2 * 10**5)) for r in (0.25, 1, 4)]
    lo, hi = max(e.ci[0] for e in st), min(e.ci[1] for e in st)
    ok_s = lo <= hi
    assert record("10", ok_g and ok_s, f"gaussian E[S(1)]h(1) = {g.value:.4f} +- {g.half_width:.4f}; "
                                       f"stable products {[round(e.value, 4) for e in st]} share a CI point")


def test_criterion_11_cone():
    t = parse_zoo("cauchy:2")
    ests = [cone_probability(t, 1.0, 1.0, O, MILLION) for O in (None, random_rotation(2, 1), random_rotation(2, 2))]
    ok_c = all(abs(e.value - 0.25) <= 0.01 for e in ests)
    rep = cone_audit(parse_zoo("mixed_stable:2,1.5"), 1.0, dyadic_times(2.0**-8, 1.0), cfg=MILLION)
    ok = ok_c and rep["inf_lower"] > 0
    assert record("11", ok, f"Cauchy cone {[round(e.value, 4) for e in ests]}; mixed inf(est - hw) "
                            f"{rep['inf_lower']:.4f} at t = {rep['argmin_time']:g}")


def test_criterion_12_half_line():
    t = parse_zoo("one_sided_1_stable")
    ests = [half_line_probability(t, 2.0**-k, MILLION, cross_check=False) for k in (2, 4, 6)]
    ok = all(a.ci[0] > b.ci[1] for a, b in zip(ests, ests[1:]))
    assert record("12", ok, "P(Y_t < 0) = " + ", ".join(f"{e.value:.4f} +- {e.half_width:.4f}" for e in ests))


def test_criterion_13_decomposition_diagnostics():
    t = parse_zoo(EXAMPLE)
    t0 = time.perf_counter()
    rep = diagnostics(t, t.reference["minorant"], 1.0)
    took = time.perf_counter() - t0
    resid = rep["invariants"]["additivity_residual"]
    band = rep["char_integral"]["band"]
    inf_mass = rep["ball_mass"]["inf"]
    ok = (resid < 1e-10 and len(rep["char_integral"]["values"]) == 16 and band <= 5 and inf_mass > 0
          and took < 300)
    assert record("13", ok, f"additivity {resid:.1e}, char band {band:.4f} over 16 t, inf ball mass "
                            f"{inf_mass:.4f} over {rep['members']} members, {took:.0f} s")


def test_criterion_14_mode_symmetry():
    names = [z for z in ZOO if parse_zoo(z).is_symmetric()]
    worst = max(sup_density(parse_zoo(n), s, check_symmetry=False).cells_from_origin
                for n in names for s in (2.0**-6, 2.0**-2, 1.0))
    assert record("14", worst <= 2, f"max |x_t| = {worst:.2f} cells over {len(names)} symmetric members")
