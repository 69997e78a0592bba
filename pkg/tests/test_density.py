import numpy as np
import pytest
from scipy import stats
from scipy.signal import fftconvolve

from levyhk.concentration import ConcentrationFn
from levyhk.density import (cdf_point, density_grid, density_point, dyadic_times, gradient_envelope_check,
                            sup_density, verify_lower_envelope, verify_upper_envelope)
from levyhk.errors import VariantPreconditionFailed
from levyhk.zoo import gaussian, parse_zoo

ZOO = ["gaussian:1", "gaussian:2", "cauchy", "isotropic_stable:2,1.5", "isotropic_stable:3,0.7",
       "cylindrical_stable:2,1.0", "one_sided_1_stable", "stable_subordinator:0.5",
       "product_stable:0.5,1.0,1.5", "mixed_stable:2,1.0", "spherical_stable:2,0.8", "gaussian_cauchy"]
SYMMETRIC = [z for z in ZOO if parse_zoo(z).is_symmetric()]


@pytest.fixture(scope="module")
def cauchy_grid():
    return density_grid(parse_zoo("cauchy"), 1.0, n=2**14)


def test_cauchy_grid_matches_closed_form(cauchy_grid):
    g = cauchy_grid
    x = g.coordinates(0)
    sel = np.abs(x) <= 10
    assert g.pass_grade
    assert np.max(np.abs(g.values[sel] - 1 / (np.pi * (1 + x[sel] ** 2)))) <= 1e-6


def test_grid_summary_and_rows(cauchy_grid):
    s = cauchy_grid.summary()
    assert s["pass_grade"] and s["dim"] == 1 and s["shape"] == [2**14]
    rows = cauchy_grid.to_rows()
    assert rows.shape == (2**14, 2)
    assert np.array_equal(rows[:, 1], cauchy_grid.values)


@pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
def test_gaussian_2d_at_origin(t):
    g = density_grid(parse_zoo("gaussian:2"), t)
    assert g.evaluate([[0.0, 0.0]])[0] == pytest.approx(1 / (2 * np.pi * t), rel=1e-8)


def test_subordinator_support_and_density():
    t = parse_zoo("stable_subordinator:0.5")
    g = density_grid(t, 1.0)
    x = g.coordinates(0)
    assert np.all(g.values[x < 0] <= 1e-6)
    pos = (x > 0.05) & (x < 20)
    levy = (4 * np.pi) ** -0.5 * x[pos] ** -1.5 * np.exp(-1 / (4 * x[pos]))
    assert np.max(np.abs(g.values[pos] - levy)) < 1e-5 * levy.max()


def test_density_point_closed_forms():
    assert density_point(parse_zoo("cauchy"), 1.0, [0.0]) == pytest.approx(1 / np.pi, rel=1e-9)
    assert density_point(parse_zoo("gaussian:1"), 2.0, [0.0]) == pytest.approx((4 * np.pi) ** -0.5, rel=1e-9)


def test_density_point_agrees_with_grid(cauchy_grid):
    x = cauchy_grid.coordinates(0)
    idx = np.searchsorted(x, [-3.0, 0.0, 0.7, 5.0])
    t = parse_zoo("cauchy")
    for i in idx:
        assert density_point(t, 1.0, [x[i]]) == pytest.approx(cauchy_grid.values[i], rel=1e-5)


@pytest.mark.parametrize("name", ["cauchy", "isotropic_stable:1,1.5", "gaussian_cauchy"])
def test_symmetric_density_is_even(name):
    t = parse_zoo(name)
    for x in np.random.default_rng(0).uniform(0.1, 4, 3):
        assert density_point(t, 0.5, [x]) == pytest.approx(density_point(t, 0.5, [-x]), rel=1e-8)


@pytest.mark.parametrize("alpha", [0.7, 1.5])
def test_stable_self_similarity(alpha):
    t = parse_zoo(f"isotropic_stable:1,{alpha}")
    for s, x in [(0.1, 0.3), (4.0, -2.0)]:
        lhs = density_point(t, s, [x])
        rhs = s ** (-1 / alpha) * density_point(t, 1.0, [s ** (-1 / alpha) * x])
        assert lhs == pytest.approx(rhs, rel=1e-5)


def test_cdf_point_cauchy():
    t = parse_zoo("cauchy")
    for x in (-2.0, 0.0, 0.5, 7.0):
        assert cdf_point(t, 1.0, x) == pytest.approx(0.5 + np.arctan(x) / np.pi, abs=1e-8)


def test_cdf_point_gaussian_drift():
    t = gaussian(1, 0.5, [10.0])
    assert cdf_point(t, 1e-3, 0.0) == pytest.approx(stats.norm.cdf(-10 * np.sqrt(1e-3)), abs=1e-8)


@pytest.mark.parametrize("name", ["cauchy", "one_sided_1_stable", "gaussian_cauchy"])
@pytest.mark.parametrize("time", [0.25, 1.0])
def test_chapman_kolmogorov(name, time):
    # the default alias tolerance, 1e-6 of the peak, is too coarse for 1e-4 in the tails
    t = parse_zoo(name)
    E = 60.0
    g = density_grid(t, time, n=2**14, extent=E, alias_tol=1e-10)
    g2 = density_grid(t, 2 * time, n=2**14, extent=E, alias_tol=1e-10)
    x = g.coordinates(0)
    dx = g.spacing[0]
    conv = fftconvolve(g.values, g.values) * dx
    xc = 2 * x[0] + dx * np.arange(len(conv))
    # 16 random points in the bulk, where p(2t, .) exceeds 1e-3 of its peak, away from the
    # window edge so that jumps leaving [-E, E] stay negligible
    x2 = g2.coordinates(0)
    bulk = x2[(g2.values >= 1e-3 * g2.values.max()) & (np.abs(x2) <= E / 8)]
    for pt in np.random.default_rng(4).uniform(bulk.min(), bulk.max(), 16):
        lhs = g2.evaluate([[pt]])[0]
        rhs = np.interp(pt, xc, conv)
        assert rhs == pytest.approx(lhs, rel=1e-4)


def test_radial_3d_cauchy_closed_form():
    # p(1, x) = pi^{-2} (1 + |x|^2)^{-2} for the Cauchy law in R^3
    g = density_grid(parse_zoo("cauchy:3"), 1.0)
    assert g.certification.startswith("radial")
    idx = np.random.default_rng(3).integers(40, 88, (20, 3))
    pts = np.column_stack([g.coordinates(k)[idx[:, k]] for k in range(3)])
    want = np.pi**-2 * (1 + np.sum(pts**2, axis=1)) ** -2
    assert np.allclose(g.values[tuple(idx.T)], want, rtol=1e-6)
    assert g.evaluate([[0.0, 0.0, 0.0]])[0] == pytest.approx(np.pi**-2, rel=1e-7)


# -- supremum and mode -------------------------------------------------------------------
@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_sup_gaussian_and_cauchy(t):
    s = sup_density(parse_zoo("gaussian:1"), t)
    assert s.value == pytest.approx((2 * np.pi * t) ** -0.5, rel=1e-6)
    s = sup_density(parse_zoo("cauchy"), t)
    assert s.value == pytest.approx(1 / (np.pi * t), rel=1e-6)
    assert s.cells_from_origin <= 2


@pytest.mark.parametrize("name", SYMMETRIC)
@pytest.mark.parametrize("t", [2.0**-6, 2.0**-2, 1.0])
def test_symmetric_mode_at_origin(name, t):
    assert sup_density(parse_zoo(name), t).cells_from_origin <= 2


def test_one_sided_mode_is_off_origin():
    t = parse_zoo("one_sided_1_stable")
    for time in (2.0**-6, 2.0**-2):
        coarse = sup_density(t, time)
        fine = sup_density(t, time, n=2**15)
        assert coarse.cells_from_origin > 2
        assert fine.location[0] == pytest.approx(coarse.location[0], abs=2 * coarse.grid.spacing[0])


def test_one_sided_mode_follows_the_drift():
    # h^{-1}(1/t) = 2t and t b_{2t} = -t log(2t): the raw argmax ratio grows by log(2)/2 per
    # octave, while the argmax measured from the drift shift is a fixed multiple of 2t
    t = parse_zoo("one_sided_1_stable")
    c = ConcentrationFn(t)
    raw, centred = [], []
    for time in dyadic_times(2.0**-8, 0.5):
        s = sup_density(t, time)
        L = c.inverse(1 / time)
        raw.append(s.mode_ratio * np.sign(s.location[0]))
        centred.append((s.location[0] + time * np.log(L)) / L)
    assert np.allclose(np.diff(raw), np.log(2) / 2, atol=2e-3)
    assert np.allclose(centred, centred[0], rtol=1e-3)


def test_dyadic_times():
    assert dyadic_times(2.0**-3, 1.0) == [1.0, 0.5, 0.25, 0.125]
    assert dyadic_times(0.3, 0.9) == [0.5]


# -- envelopes ------------------------------------------------------------------------------
def test_upper_envelope_gaussian_is_exact():
    cert = verify_upper_envelope(parse_zoo("gaussian:1"), dyadic_times(2.0**-6, 1.0))
    assert cert.verdict == "pass"
    assert cert.spread == pytest.approx(1.0, abs=1e-6)


def test_upper_envelope_stable():
    cert = verify_upper_envelope(parse_zoo("isotropic_stable:1,1.5"), dyadic_times(2.0**-10, 1.0))
    assert cert.verdict == "pass"
    assert cert.spread <= 1.2
    assert "t ratio" in cert.gnuplot()
    assert cert.to_dict()["verdict"] == "pass"


def test_upper_envelope_product_fails():
    cert = verify_upper_envelope(parse_zoo("product_stable:0.5,1.0,1.5"), dyadic_times(2.0**-8, 1.0))
    assert cert.verdict == "fail"
    r = np.array(cert.ratios)
    assert np.all(np.diff(r) > 0)  # grows as t decreases


def test_lower_envelope_gaussian_with_drift():
    t = gaussian(1, 0.5, [3.0])
    cert = verify_lower_envelope(t, dyadic_times(2.0**-6, 1.0), theta=5.0, variant="gaussian")
    assert cert.verdict == "pass"
    # the shift absorbs the drift; the variance is t, so the inf at |x| = 5 sqrt t is e^{-12.5}/sqrt(2 pi)
    assert np.allclose(cert.ratios, np.exp(-12.5) / np.sqrt(2 * np.pi), rtol=1e-6)


def test_lower_envelope_preconditions():
    with pytest.raises(VariantPreconditionFailed):
        verify_lower_envelope(parse_zoo("cauchy"), [1.0], variant="gaussian")
    with pytest.raises(VariantPreconditionFailed):
        verify_lower_envelope(parse_zoo("gaussian:1"), [1.0], variant="alpha-ge-1")
    with pytest.raises(VariantPreconditionFailed):
        verify_lower_envelope(parse_zoo("cauchy"), [1.0], variant="symmetric-minorant")
    with pytest.raises(VariantPreconditionFailed):
        verify_lower_envelope(parse_zoo("cauchy"), [1.0], variant="nope")


def test_lower_envelope_subordinator_counterexample():
    t = parse_zoo("stable_subordinator:0.5")
    cert = verify_lower_envelope(t, [2.0**-4, 2.0**-6], theta=20.0, variant="symmetric-minorant", force=True)
    assert cert.verdict == "fail"
    assert cert.min_ratio == 0.0
    x = cert.witness["x"][0]
    assert cdf_point(t, cert.witness["t"], x) < 1e-6


def test_gradient_envelope_gaussian():
    ts = dyadic_times(2.0**-4, 1.0)
    cert = gradient_envelope_check(parse_zoo("gaussian:1"), ts)
    assert cert.verdict == "pass"
    # sup |p'| = (2 pi)^{-1/2} t^{-1} e^{-1/2}; h^{-1}(1/t)^2 = t/2
    want = np.exp(-0.5) / np.sqrt(2 * np.pi) / 2
    assert np.allclose(cert.ratios, want, rtol=1e-4)


def test_gradient_envelope_cauchy():
    cert = gradient_envelope_check(parse_zoo("cauchy"), dyadic_times(2.0**-4, 1.0))
    assert cert.verdict == "pass"
    # sup |p'(1, x)| = 3 sqrt 3 / (8 pi) at x = 1/sqrt 3; h^{-1}(1/t) = 4t/pi
    want = 3 * np.sqrt(3) / (8 * np.pi) * (4 / np.pi) ** 2
    assert np.allclose(cert.ratios, want, rtol=1e-3)
