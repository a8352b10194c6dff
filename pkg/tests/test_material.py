import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermodamage.material import MaterialModel


def test_enthalpy_and_inverse_reference_values():
    m = MaterialModel(c0=1.0, sigma=2.0)
    # h(theta) = ((1 + theta)^2 - 1) / 2
    assert m.enthalpy(1.0) == pytest.approx(1.5)
    assert m.theta_of_w(1.5) == pytest.approx(1.0)
    assert m.heat_capacity(1.0) == pytest.approx(2.0)


def test_theta_vanishes_for_negative_enthalpy():
    m = MaterialModel()
    np.testing.assert_array_equal(m.theta_of_w(np.array([-2.0, -1e-12, 0.0])), 0.0)


def test_theta_of_w_preserves_scalar_type():
    assert np.ndim(MaterialModel().theta_of_w(0.3)) == 0


def test_negative_temperature_rejected():
    with pytest.raises(ValueError):
        MaterialModel().enthalpy(-0.1)


@pytest.mark.parametrize("c0,sigma", [(1.0, 2.0), (0.3, 1.1), (4.0, 3.5)])
def test_closed_form_matches_bisection(c0, sigma):
    m = MaterialModel(c0=c0, sigma=sigma, sigma1=sigma)
    w = np.linspace(0.0, 50.0, 41)
    np.testing.assert_allclose(m.theta_of_w(w), m.theta_of_w_bisect(w), rtol=1e-12, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1e3), st.floats(0.2, 5.0), st.floats(1.01, 4.0))
def test_enthalpy_round_trip(theta, c0, sigma):
    m = MaterialModel(c0=c0, sigma=sigma, sigma1=sigma)
    assert m.theta_of_w(m.enthalpy(theta)) == pytest.approx(theta, rel=1e-11, abs=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1e4), st.floats(0.2, 5.0), st.floats(1.01, 4.0))
def test_theta_growth_bounds(w, c0, sigma):
    m = MaterialModel(c0=c0, sigma=sigma, sigma1=sigma)
    d0, d1 = m.theta_growth_constants()
    th = m.theta_of_w(w)
    assert th <= d0 * (w ** (1 / sigma) + 1) * (1 + 1e-12)
    assert th >= d1 * (w ** (1 / sigma) - 1) - 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-10.0, 1e3))
def test_ratio_bounded_conductivity_stays_in_bounds(w):
    m = MaterialModel(c2=0.5, c3=2.0)
    k = m.conductivity_ratio(w)
    assert 0.5 <= k <= 2.0


def test_power_conductivity():
    m = MaterialModel(conductivity="power", c10=2.0, q=1.5)
    assert m.conductivity_ratio(1.0) == pytest.approx(4.0)
    assert m.conductivity_ratio(-3.0) == pytest.approx(2.0)
    assert m.conductivity_bounds() == (2.0, np.inf)


def test_truncations():
    m = MaterialModel(M=2.0)
    np.testing.assert_array_equal(m.T_M(np.array([-5.0, 1.0, 5.0])), [-2.0, 1.0, 2.0])
    assert m.Theta_M(10.0) == pytest.approx(m.theta_of_w(2.0))


def test_power_flux_and_density():
    m = MaterialModel(p=4.0)
    np.testing.assert_allclose(m.flux_d(np.array([2.0, 0.0])), [8.0, 0.0])
    assert m.phi_density(np.array([2.0, 0.0])) == pytest.approx(4.0)


def test_regularized_density_vanishes_at_zero_and_flux_is_its_gradient():
    m = MaterialModel(p=3.0, phi="regularized")
    assert m.phi_density(np.zeros(2)) == 0.0
    z = np.array([0.3, -0.7])
    h = 1e-6
    fd = [(m.phi_density(z + h * e) - m.phi_density(z - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(m.flux_d(z), fd, rtol=1e-8)


def test_log_potential_at_half():
    m = MaterialModel(W="log")
    assert m.W_value(0.5) == pytest.approx(-np.log(2.0))
    assert np.isinf(m.W_value(1.5))


def test_indicator_potentials():
    m = MaterialModel(gamma_coeffs=[1.0, -2.0])
    assert m.gamma_hat(1.0) == pytest.approx(0.0)  # chi - chi^2
    assert np.isinf(m.W_value(-0.1))
    m.W = "indicator0inf"
    assert np.isfinite(m.W_value(3.0))


def test_gamma_derivatives_consistent():
    m = MaterialModel(gamma_coeffs=[0.5, -1.0, 2.0])
    x, h = 0.4, 1e-6
    assert m.gamma(x) == pytest.approx((m.gamma_hat(x + h) - m.gamma_hat(x - h)) / (2 * h), rel=1e-8)
    assert m.gamma_prime(x) == pytest.approx((m.gamma(x + h) - m.gamma(x - h)) / (2 * h), rel=1e-8)


@pytest.mark.parametrize("mode,val,der", [("identity", 0.3, 1.0), ("one_minus", 0.7, -1.0), ("constant", 2.0, 0.0)])
def test_coefficients(mode, val, der):
    m = MaterialModel(a=mode, a_const=2.0)
    assert m.coeff("a", 0.3) == pytest.approx(val)
    assert m.coeff_prime("a", 0.3) == pytest.approx(der)


@pytest.mark.parametrize("kwargs,needle", [
    ({"p": 1.5}, "p must"),
    ({"sigma": 0.5}, "sigma"),
    ({"c2": 2.0, "c3": 1.0}, "c2"),
    ({"conductivity": "power", "q": 0.5}, "q="),
    ({"mu": 1, "W": "log"}, "indicator0inf"),
    ({"delta": -1.0}, "delta"),
])
def test_validate_names_violation(kwargs, needle):
    with pytest.raises(ValueError, match=needle):
        MaterialModel(**kwargs).validate(dim=1)


def test_p_must_exceed_dimension_in_2d():
    MaterialModel(p=2.5).validate(1)
    with pytest.raises(ValueError, match="exceed dim"):
        MaterialModel(p=2.0).validate(2)


def test_isotropic_densities():
    m = MaterialModel(lambda1=1.0, lambda2=2.0)
    eps = np.array([[1.0, 0.5], [0.5, -1.0]])
    # l1 tr^2 + 2 l2 |eps|^2
    assert m.elastic_density(eps) == pytest.approx(0.0 + 4.0 * 2.5)
