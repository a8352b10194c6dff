import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermodamage.chi_solver import (ChiStepProblem, brute_force_minimize, chi_energy, chi_energy_gradient,
                                     chi_semilinear_step, minimize_chi, one_sided_vi_residual,
                                     projected_gradient_residual, yosida_beta, yosida_beta_hat)
from thermodamage.grid import build_mesh
from thermodamage.material import MaterialModel


def irreversible_model(**kw):
    return MaterialModel(mu=1, W="indicator0inf", **kw)


def test_yosida_values():
    assert yosida_beta(-0.2, 0.1) == pytest.approx(-2.0)
    assert yosida_beta(0.3, 0.1) == 0.0
    assert yosida_beta_hat(-0.2, 0.1) == pytest.approx(0.2)
    assert yosida_beta_hat(0.5, 0.1) == 0.0


def test_energy_infinite_outside_box(mesh1d):
    prob = ChiStepProblem.reversible(mesh1d, MaterialModel(), np.full(mesh1d.n_nodes, 0.5), 0.1, 0.0)
    chi = np.full(mesh1d.n_nodes, 0.5)
    assert np.isfinite(chi_energy(chi, prob))
    chi[2] = 1.01
    assert chi_energy(chi, prob) == np.inf


@pytest.mark.parametrize("h,expected", [(1.0, 0.4), (-2.0, 0.7), (10.0, 0.0), (-10.0, 1.0)])
def test_constant_state_closed_form(mesh1d, h, expected):
    # spatially constant data: chi = clip(chi_prev - tau h, 0, 1)
    prob = ChiStepProblem.reversible(mesh1d, MaterialModel(), np.full(mesh1d.n_nodes, 0.5), 0.1, h)
    chi, rep = minimize_chi(prob)
    assert rep.converged
    np.testing.assert_allclose(chi, expected, atol=1e-9)


def test_lower_bound_multiplier_sign(mesh1d):
    prob = ChiStepProblem.reversible(mesh1d, MaterialModel(), np.full(mesh1d.n_nodes, 0.5), 0.1, 10.0)
    chi, xi, rep = chi_semilinear_step(prob)
    assert np.all(chi == 0.0)
    # G = (0 - 0.5)/0.1 + 10 = 5, balanced by xi = -5
    np.testing.assert_allclose(xi, -5.0, rtol=1e-12)
    np.testing.assert_allclose(rep.zeta, 0.0)


def test_upper_bound_multiplier_sign(mesh1d):
    prob = ChiStepProblem.reversible(mesh1d, MaterialModel(), np.full(mesh1d.n_nodes, 0.5), 0.1, -10.0)
    chi, mult, rep = chi_semilinear_step(prob)
    assert np.all(chi == 1.0)
    np.testing.assert_allclose(rep.zeta, 5.0, rtol=1e-12)
    np.testing.assert_allclose(rep.xi, 0.0)


def test_irreversible_never_exceeds_previous(rng):
    mesh = build_mesh(1, 1.0, 16)
    prev = rng.uniform(0.2, 0.9, mesh.n_nodes)
    prob = ChiStepProblem.irreversible(mesh, irreversible_model(), prev, 0.05, rng.uniform(-5, 5, mesh.n_nodes))
    chi, rep = minimize_chi(prob)
    assert rep.converged
    assert np.all(chi <= prev)
    assert np.all(chi >= 0)
    assert one_sided_vi_residual(chi, prob, rep.xi) <= 1e-8


def test_log_mode_stays_open(mesh1d):
    model = MaterialModel(W="log", log_c1=0.5)
    prob = ChiStepProblem.reversible(mesh1d, model, np.full(mesh1d.n_nodes, 0.5), 0.1, 40.0)
    chi, rep = minimize_chi(prob)
    assert rep.converged
    assert np.all((chi > 0) & (chi < 1))
    np.testing.assert_allclose(rep.xi, 0.0)


def test_yosida_mode_allows_negative_values(mesh1d):
    model = irreversible_model()
    prob = ChiStepProblem.isothermal_irreversible(mesh1d, model, np.full(mesh1d.n_nodes, 0.1), 0.1, 5.0)
    chi, rep = minimize_chi(prob)
    # (chi - 0.1)/tau + chi/tau + 5 = 0 for chi < 0
    np.testing.assert_allclose(chi, (0.1 - 0.5) / 2, atol=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_matches_brute_force_oracle(seed):
    rng = np.random.default_rng(seed)
    mesh = build_mesh(1, 1.0, int(rng.integers(2, 6)))
    model = MaterialModel(p=4.0, gamma_coeffs=[rng.uniform(-1, 1), -0.5])
    prob = ChiStepProblem.reversible(mesh, model, rng.uniform(0.2, 0.8, mesh.n_nodes), 0.1,
                                     rng.uniform(-4, 4, mesh.n_nodes))
    chi, rep = minimize_chi(prob)
    chi_bf, e_bf = brute_force_minimize(prob)
    assert rep.energy <= e_bf + 1e-12
    assert rep.energy == pytest.approx(e_bf, abs=2e-3)
    np.testing.assert_allclose(chi, chi_bf, atol=5e-2)


def test_brute_force_rejects_2d(mesh2d):
    prob = ChiStepProblem.reversible(mesh2d, MaterialModel(), np.full(mesh2d.n_nodes, 0.5), 0.1, 0.0)
    with pytest.raises(ValueError):
        brute_force_minimize(prob)


def test_gradient_against_differences(rng):
    mesh = build_mesh(2, 1.0, 3)
    model = MaterialModel(p=3.0, gamma_coeffs=[0.3, -1.0])
    prob = ChiStepProblem.reversible(mesh, model, rng.uniform(0.2, 0.8, mesh.n_nodes), 0.1,
                                     rng.uniform(-1, 1, mesh.n_nodes))
    chi = rng.uniform(0.2, 0.8, mesh.n_nodes)
    h = 1e-6
    fd = np.array([(chi_energy(chi + h * e, prob) - chi_energy(chi - h * e, prob)) / (2 * h)
                   for e in np.eye(mesh.n_nodes)])
    np.testing.assert_allclose(chi_energy_gradient(chi, prob), fd, rtol=1e-6, atol=1e-9)


def test_invalid_problem_rejected(mesh1d):
    with pytest.raises(ValueError):
        ChiStepProblem(mesh1d, MaterialModel(), np.zeros(mesh1d.n_nodes), 0.1, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        ChiStepProblem(mesh1d, MaterialModel(), np.zeros(mesh1d.n_nodes), -0.1, 0.0, 0.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.005, 0.5))
def test_minimizer_decreases_energy_and_is_stationary(seed, tau):
    rng = np.random.default_rng(seed)
    mesh = build_mesh(1, 1.0, 10)
    prev = rng.uniform(0, 1, mesh.n_nodes)
    prob = ChiStepProblem.irreversible(mesh, irreversible_model(gamma_coeffs=[0.0, -1.0]), prev, tau,
                                       rng.uniform(-3, 3, mesh.n_nodes))
    chi, rep = minimize_chi(prob)
    assert rep.converged
    assert rep.energy <= rep.energy_prev + 1e-12
    assert projected_gradient_residual(chi, prob) <= 1e-8
    assert np.all(rep.xi <= 0) and np.all(rep.zeta >= 0)
