import numpy as np
import pytest
from scipy import integrate, special

from levyhk import decompose_diag as D
from levyhk.concentration import ConcentrationFn
from levyhk.conditions import exp_moment_integral
from levyhk.errors import MembershipViolated
from levyhk.exponent import CharExponent
from levyhk.zoo import parse_zoo


@pytest.fixture(scope="module")
def mixed():
    base = parse_zoo("mixed_stable:2,1.0")
    return base, base.reference["minorant"]


@pytest.fixture(scope="module")
def cauchy():
    return parse_zoo("cauchy")


# -- lambda threshold ---------------------------------------------------------------------
def test_lambda_threshold_one_sided():
    # h_nu(r) = 2/r
    c = ConcentrationFn(parse_zoo("one_sided_1_stable"))
    assert D.lambda_threshold(c, 1.0) == pytest.approx(2.0, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.7, 1.5])
def test_lambda_threshold_power_law(alpha):
    c = ConcentrationFn(parse_zoo(f"isotropic_stable:2,{alpha}"))
    lam = np.array([D.lambda_threshold(c, 2.0**-k) for k in range(0, 12, 2)])
    assert np.allclose(lam / 2.0 ** (-np.arange(0, 12, 2) / alpha), lam[0], rtol=1e-8)


def test_lambda_threshold_is_linear_in_a0():
    c = ConcentrationFn(parse_zoo("cauchy"))
    assert D.lambda_threshold(c, 0.1, 2.0) == pytest.approx(2 * D.lambda_threshold(c, 0.1), rel=1e-12)
    with pytest.raises(ValueError):
        D.lambda_threshold(c, 0.0)
    with pytest.raises(ValueError):
        D.lambda_threshold(c, 1.0, 0.5)


# -- members ------------------------------------------------------------------------------
def test_symmetric_member_is_real_up_to_shift(mixed):
    base, nu = mixed
    y = np.array([0.3, -0.2])
    m = D.classx_member(base, nu, 1.0, 2.0**-4, 1.0, y)
    assert np.all(m.drift2 == 0)
    X = np.random.default_rng(0).standard_normal((8, 2)) * 5
    assert np.allclose((m.psi(X) + 1j * X @ y).imag, 0.0, atol=1e-14)


def test_member_exponent_is_hermitian():
    base = parse_zoo("stable_subordinator:0.5")
    m = D.classx_member(base, base.N, 1.0, 2.0**-4, 1.0, [0.4])
    X = np.linspace(-30, 30, 13)[:, None]
    assert np.allclose(m.psi(-X), np.conj(m.psi(X)), rtol=1e-13, atol=1e-15)


def test_member_at_unit_lambda_is_Z2(cauchy):
    # h_nu^{-1}(1/t) = 4t/pi, so lam = 1 at t = pi/4
    t = np.pi / 4
    m = D.classx_member(cauchy, cauchy.N, 1.0, t, 1.0, [0.0], T=2.0)
    assert m.lam == pytest.approx(1.0, rel=1e-9)
    X = np.linspace(-8, 8, 9)[:, None]
    assert np.allclose(m.psi(X), t * CharExponent(m.z2).psi(X), rtol=1e-12)


def test_membership_violations(cauchy):
    with pytest.raises(MembershipViolated, match="exceeds r"):
        D.classx_member(cauchy, cauchy.N, 1.0, 0.01, 1.0, [1.5])
    with pytest.raises(MembershipViolated, match="lambda"):
        D.classx_member(cauchy, cauchy.N, 1.0, 1.0, 1.0, [0.0])
    with pytest.raises(MembershipViolated, match="minorization"):
        D.classx_member(cauchy, parse_zoo("isotropic_stable:1,1.5").N, 1.0, 2.0**-4, 1.0, [0.0])


# -- characteristic integral ---------------------------------------------------------------
def cylindrical_char_oracle(lam, t):
    """lam^2 (int exp(-t phi(s)) ds)^2 with phi(s) = (s/pi)(Si(s lam) - (1 - cos s lam)/(s lam))."""
    def phi(s):
        x = s * lam
        return s / np.pi * (special.sici(x)[0] - (1 - np.cos(x)) / x)

    val, _ = integrate.quad(lambda s: np.exp(-t * phi(s)), 0, np.inf, limit=500, epsrel=1e-12)
    return lam**2 * (2 * val) ** 2


def test_char_integral_against_oracle(mixed):
    base, nu = mixed
    m = D.classx_member(base, nu, 1.0, 2.0**-4, 1.0, [0.3, -0.2])
    assert D.classx_char_integral(m) == pytest.approx(cylindrical_char_oracle(m.lam, m.t), rel=1e-5)


def test_char_integral_ignores_shift(mixed):
    base, nu = mixed
    a = D.classx_member(base, nu, 1.0, 2.0**-4, 1.0, [0.0, 0.0])
    b = D.classx_member(base, nu, 1.0, 2.0**-4, 1.0, [-0.6, 0.7])
    assert D.classx_char_integral(a) == D.classx_char_integral(b)


def test_char_integral_change_of_variables(cauchy):
    m = D.classx_member(cauchy, cauchy.N, 1.0, 2.0**-6, 1.0, [0.2])
    e2, c2 = CharExponent(m.z2), ConcentrationFn(m.z2)
    direct = exp_moment_integral(CharExponent(cauchy), ConcentrationFn(cauchy), 1.0)  # 2
    assert direct == pytest.approx(2.0, rel=1e-8)
    assert D.classx_char_integral(m) == pytest.approx(m.lam * exp_moment_integral(e2, c2, m.t), rel=1e-12)


def test_char_integral_common_band(cauchy):
    vals = []
    for k in (2, 4, 6, 8):
        m = D.classx_member(cauchy, cauchy.N, 1.0, 2.0**-k, 1.0, [0.0])
        vals.append(D.classx_char_integral(m))
    # lam is proportional to t for alpha = 1, so the member law does not depend on t
    assert max(vals) / min(vals) == pytest.approx(1.0, abs=1e-8)


# -- ball mass and tails --------------------------------------------------------------------
def test_ball_mass_stable_across_t(cauchy):
    masses = [D.classx_ball_mass(D.classx_member(cauchy, cauchy.N, 1.0, 2.0**-k, 1.0, [0.5]), 1.0)
              for k in (2, 6, 10)]
    assert min(masses) > 0.5
    assert np.allclose(masses, masses[0], rtol=1e-8)


def test_ball_mass_tends_to_one(cauchy):
    m = D.classx_member(cauchy, cauchy.N, 1.0, 2.0**-4, 1.0, [0.5])
    assert D.classx_ball_mass(m, 50.0) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        D.classx_ball_mass(m, 0.0)


def test_one_sided_support_defeats_ball_mass():
    # the member law sits on [y, inf): a shift beyond r1 leaves no mass in B_{r1}
    base = parse_zoo("stable_subordinator:0.5")
    far = D.classx_member(base, base.N, 1.0, 2.0**-6, 1.0, [1.8], r=2.0)
    near = D.classx_member(base, base.N, 1.0, 2.0**-6, 1.0, [0.0], r=2.0)
    assert D.classx_ball_mass(far, 0.5) < 1e-10
    assert D.classx_ball_mass(near, 0.5) > 0.5


def test_tail_bound_example(mixed):
    base, nu = mixed
    m = D.classx_member(base, nu, 1.0, 2.0**-4, 1.0, [0.3, -0.2])
    tb = D.classx_tail_bound(m, 8.0)
    assert tb.holds and tb.fitted and tb.constant <= 10


def test_tail_bound_algebra(cauchy):
    m = D.classx_member(cauchy, cauchy.N, 1.0, 2.0**-4, 1.0, [0.5])
    fitted = D.classx_tail_bound(m, 3.0)
    assert fitted.holds and fitted.observed > 0
    # doubling R - r quarters the bound for a fixed constant
    a = D.classx_tail_bound(m, 3.0, constant=fitted.constant)
    b = D.classx_tail_bound(m, 2 * (3.0 - m.r) + m.r, constant=fitted.constant)
    assert b.bound == pytest.approx(a.bound / 4, rel=1e-12)
    assert b.holds and not b.fitted
    far = D.classx_tail_bound(m, 9.0)
    assert far.observed < 1e-4 * fitted.observed
    with pytest.raises(ValueError):
        D.classx_tail_bound(m, 2.0)


# -- probe lattice and invariants --------------------------------------------------------------
def test_probe_shifts():
    y = D.probe_shifts(2)
    assert y.shape == (8, 2)
    assert np.all(y[0] == 0)
    assert np.all(np.linalg.norm(y, axis=1) <= 1.0)
    assert np.array_equal(y, D.probe_shifts(2))


def test_probe_times_respect_T(cauchy):
    c = ConcentrationFn(cauchy)
    ts = D.probe_times(c, 4.0)
    assert len(ts) == 16
    assert all(D.lambda_threshold(c, t, 4.0) < 1.0 for t in ts)
    assert ts == sorted(ts, reverse=True)


def test_decomposition_invariants(mixed):
    base, nu = mixed
    inv = D.decomposition_invariants(base, nu, 1.0, 0.2)
    assert inv["additivity_residual"] < 1e-10
    assert inv["lower_ratio_min"] >= 1 - 1e-12
    assert inv["upper_ratio_max"] <= 1 + 1e-12
    assert inv["h_ratio_min"] >= 1.0


def test_small_part_escape_decreases_with_a0(mixed):
    base, nu = mixed
    p = [D.small_part_escape(base, nu, 1.0, 2.0**-4, a0) for a0 in (1.0, 2.0, 4.0)]
    assert p[0] > p[1] > p[2]
    assert p[2] <= D.CALIBRATION_TARGET


def test_diagnostics_short_lattice(cauchy):
    rep = D.diagnostics(cauchy, cauchy.N, 1.0, a0=2.0, times=[2.0**-4, 2.0**-8])
    assert rep["members"] == 16
    assert rep["char_integral"]["band"] == pytest.approx(1.0, abs=1e-8)
    assert rep["ball_mass"]["inf"] > 0
    assert rep["invariants"]["additivity_residual"] < 1e-10
