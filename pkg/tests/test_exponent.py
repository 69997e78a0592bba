import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from levyhk.concentration import ConcentrationFn
from levyhk.exponent import CharExponent
from levyhk.measure import project_measure
from levyhk.zoo import gaussian, parse_zoo

ZOO = ["gaussian:1", "gaussian:2", "cauchy", "isotropic_stable:2,1.5", "isotropic_stable:3,0.7",
       "cylindrical_stable:2,1.0", "one_sided_1_stable", "stable_subordinator:0.5",
       "product_stable:0.5,1.0,1.5", "mixed_stable:2,1.0", "spherical_stable:2,0.8", "gaussian_cauchy"]


def test_cauchy_re_psi():
    assert CharExponent(parse_zoo("cauchy")).re_psi([[3.0]])[0] == pytest.approx(3.0, rel=1e-10)


def test_gaussian_psi_is_quadratic():
    e = CharExponent(parse_zoo("gaussian:2"))
    X = np.random.default_rng(0).standard_normal((7, 2))
    assert np.allclose(e.psi(X), 0.5 * np.sum(X**2, axis=1), rtol=1e-14)


def test_gaussian_with_drift():
    e = CharExponent(gaussian(1, 0.5, [1.0]))
    x = np.array([[0.3], [-2.0]])
    assert np.allclose(e.psi(x), 0.5 * x[:, 0] ** 2 - 1j * x[:, 0], rtol=1e-14)


def test_one_sided_re_psi():
    assert CharExponent(parse_zoo("one_sided_1_stable")).re_psi([[2.0]])[0] == pytest.approx(np.pi, rel=1e-10)


def test_one_sided_psi_against_reference_quadrature():
    psi = CharExponent(parse_zoo("one_sided_1_stable")).psi([[1.0]])[0]
    assert psi.real == pytest.approx(np.pi / 2, rel=1e-10)
    # Im psi(1) = int_0^inf (sin u - u 1{u<1}) u^-2 du, evaluated independently
    near, _ = integrate.quad(lambda u: (np.sin(u) - u) / u**2, 0, 1, epsabs=1e-14)
    far, _ = integrate.quad(lambda u: u**-2.0, 1, np.inf, weight="sin", wvar=1.0)
    assert psi.imag == pytest.approx(near + far, abs=1e-6)


@pytest.mark.parametrize("name", ["cauchy", "cylindrical_stable:2,1.0", "product_stable:0.5,1.0,1.5"])
def test_symmetric_has_real_exponent(name):
    t = parse_zoo(name)
    X = np.random.default_rng(1).standard_normal((10, t.dim)) * 3
    assert np.all(CharExponent(t).im_psi(X) == 0)


@pytest.mark.parametrize("name", [z for z in ZOO if z not in ("mixed_stable:2,1.0", "spherical_stable:2,0.8")])
def test_against_zoo_closed_forms(name):
    t = parse_zoo(name)
    X = np.random.default_rng(2).standard_normal((12, t.dim)) * 2
    got = CharExponent(t).psi(X)
    want = t.reference["psi"](X)
    assert np.allclose(got, want, rtol=1e-8, atol=1e-12)


@pytest.mark.parametrize("name", ["mixed_stable:2,1.0", "spherical_stable:2,0.8", "mixed_stable:2,1.5"])
def test_real_part_against_zoo_closed_forms(name):
    t = parse_zoo(name)
    X = np.random.default_rng(2).standard_normal((12, t.dim)) * 2
    assert np.allclose(CharExponent(t).re_psi(X), t.reference["re_psi"](X), rtol=1e-8)


@pytest.mark.parametrize("name", ZOO)
def test_real_part_invariants(name):
    t = parse_zoo(name)
    e = CharExponent(t)
    X = np.random.default_rng(5).standard_normal((16, t.dim)) * 4
    assert np.all(e.re_psi(X) >= 0)
    assert e.re_psi(np.zeros((1, t.dim)))[0] == 0
    assert np.allclose(e.re_psi(X), e.re_psi(-X), rtol=1e-12)


def test_psi_star_isotropic():
    e = CharExponent(parse_zoo("isotropic_stable:2,1.5"))
    r = np.array([0.1, 1.0, 7.0])
    assert np.allclose(e.psi_star(r), r**1.5, rtol=1e-10)


def test_psi_star_cylindrical():
    e = CharExponent(parse_zoo("cylindrical_stable:2,1.0"))
    r = np.array([0.5, 1.0, 3.0])
    assert np.allclose(e.psi_star(r), np.sqrt(2) * r, rtol=1e-8)


@pytest.mark.parametrize("name", ZOO)
def test_sandwich(name):
    t = parse_zoo(name)
    e, c = CharExponent(t), ConcentrationFn(t)
    r = 2.0 ** np.linspace(-8, 8, 9)
    ps = e.psi_star(r)
    h = c.h(1.0 / r)
    lower = 1.0 / (8 * (1 + 2 * t.dim))
    assert np.all(ps >= lower * h) and np.all(ps <= 2 * h)


@pytest.mark.parametrize("name", ["mixed_stable:2,1.0", "product_stable:0.5,1.0,1.5"])
def test_psi_star_dominates_samples(name):
    t = parse_zoo(name)
    e = CharExponent(t)
    r = np.array([0.5, 2.0, 8.0])
    ps = e.psi_star(r)
    assert np.all(np.diff(ps) >= 0)
    rng = np.random.default_rng(9)
    for rk, pk in zip(r, ps):
        g = rng.standard_normal((200, t.dim))
        g *= (rk * rng.uniform(size=200) ** (1 / t.dim) / np.linalg.norm(g, axis=1))[:, None]
        assert np.all(e.re_psi(g) <= pk * (1 + 1e-9))


def test_quadratic_form_gaussian():
    t = gaussian(2, 0.5)
    x = np.array([[0.3, -1.2]])
    assert CharExponent(t).quadratic_form_K1(x)[0] == pytest.approx(0.5 * np.sum(x**2), rel=1e-14)


@pytest.mark.parametrize("phi", [0.0, 1.1, 2.5])
def test_quadratic_form_matches_projection(phi):
    t = parse_zoo("cauchy:2")
    v = np.array([np.cos(phi), np.sin(phi)])
    q = CharExponent(t).quadratic_form_K1(v[None, :])[0]
    c1 = ConcentrationFn(project_measure(t, v))
    assert q == pytest.approx(c1.K(1.0), rel=1e-10)
    # rotational invariance
    q0 = CharExponent(t).quadratic_form_K1(np.array([[1.0, 0.0]]))[0]
    assert q == pytest.approx(q0, rel=1e-10)


def test_quadratic_form_product_axis_growth():
    # along e3 the form is the 1.5-stable truncated moment: s^2 int_{|z|<1/s} z^2 A |z|^{-2.5} = const s^1.5
    e = CharExponent(parse_zoo("product_stable:0.5,1.0,1.5"))
    s = np.array([1.0, 10.0, 100.0, 1000.0])
    q = e.quadratic_form_K1(s[:, None] * np.array([[0.0, 0.0, 1.0]]))
    ratios = q / s**1.5
    assert np.allclose(ratios, ratios[0], rtol=1e-10)


@settings(max_examples=25, deadline=None)
@given(name=st.sampled_from(["mixed_stable:2,1.0", "cylindrical_stable:2,1.0", "gaussian_cauchy",
                             "spherical_stable:2,0.8"]),
       phi=st.floats(0, 2 * np.pi), s=st.floats(0.05, 20.0))
def test_projection_identity(name, phi, s):
    t = parse_zoo(name)
    if t.dim == 1:
        v = np.array([1.0])
    else:
        v = np.array([np.cos(phi), np.sin(phi)])
    lhs = CharExponent(project_measure(t, v)).re_psi([[s]])[0]
    rhs = CharExponent(t).re_psi(s * v[None, :])[0]
    assert lhs == pytest.approx(rhs, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(phi=st.floats(0, 2 * np.pi), a=st.floats(0.05, 10.0), b=st.floats(0.05, 10.0))
def test_orthogonal_subadditivity(phi, a, b):
    t = parse_zoo("mixed_stable:2,1.0")
    e = CharExponent(t)
    u = np.array([np.cos(phi), np.sin(phi)])
    w = np.array([-u[1], u[0]])
    lhs = e.re_psi((a * u + b * w)[None, :])[0]
    rhs = 2 * e.re_psi((a * u)[None, :])[0] + 2 * e.re_psi((b * w)[None, :])[0]
    assert lhs <= rhs * (1 + 1e-10)
