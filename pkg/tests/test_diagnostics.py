import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermodamage import diagnostics as dg
from thermodamage import presets
from thermodamage.grid import build_mesh, symmetric_gradient
from thermodamage.material import MaterialModel
from thermodamage.stepper import State, run


def test_boccardo_gallouet_constant_is_zero(mesh2d):
    assert dg.boccardo_gallouet(np.full(mesh2d.n_nodes, 3.0), mesh2d, 0.5) == 0.0


def test_boccardo_gallouet_linear_profile():
    mesh = build_mesh(1, 1.0, 128)
    w = mesh.nodes[:, 0]
    # int_0^1 (1 + x)^-2 dx = 1/2, midpoint rule error O(h^2)
    assert dg.boccardo_gallouet(w, mesh, 1.0) == pytest.approx(0.5, abs=1e-5)


def test_boccardo_gallouet_rejects_negative(mesh1d):
    with pytest.raises(ValueError):
        dg.boccardo_gallouet(-np.ones(mesh1d.n_nodes), mesh1d, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 2.0), st.floats(0.0, 5.0))
def test_boccardo_gallouet_decreases_with_exponent_and_shift(seed, varsigma, shift):
    mesh = build_mesh(1, 1.0, 12)
    w = np.random.default_rng(seed).uniform(0, 3, mesh.n_nodes)
    base = dg.boccardo_gallouet(w, mesh, varsigma)
    assert dg.boccardo_gallouet(w, mesh, varsigma + 0.5) <= base
    assert dg.boccardo_gallouet(w + shift, mesh, varsigma) <= base


def _state(mesh, u, u_prev, chi):
    return State(1, 0.1, np.zeros(mesh.n_nodes), u, u_prev, chi)


def test_quasi_stresses_vanish_for_zero_displacement(mesh2d):
    z = np.zeros((mesh2d.n_nodes, 2))
    mu_q, eta_q = dg.quasi_stresses(_state(mesh2d, z, z, np.full(mesh2d.n_nodes, 0.4)), z, mesh2d, 0.1, 0.01)
    assert not mu_q.any() and not eta_q.any()


def test_quasi_stresses_reduce_to_strains(mesh2d):
    x, y = mesh2d.nodes.T
    u = np.column_stack([x * y, x - y])
    u_prev = 0.5 * u
    mu_q, eta_q = dg.quasi_stresses(_state(mesh2d, u, u_prev, np.ones(mesh2d.n_nodes)), u_prev, mesh2d, 0.1, 0.0)
    np.testing.assert_allclose(eta_q, symmetric_gradient(u, mesh2d))
    np.testing.assert_allclose(mu_q, symmetric_gradient(5.0 * u, mesh2d))


def test_eta_norm_matches_element_loop(rng):
    mesh = build_mesh(2, 1.0, 4)
    u = rng.standard_normal((mesh.n_nodes, 2))
    chi = rng.uniform(0, 1, mesh.n_nodes)
    delta = 0.05
    _, eta_q = dg.quasi_stresses(_state(mesh, u, u, chi), u, mesh, 0.1, delta)
    total = 0.0
    for e, nodes in enumerate(mesh.elements):
        G = sum(np.outer(u[a], mesh.grads[e, i]) for i, a in enumerate(nodes))
        eps = 0.5 * (G + G.T)
        total += mesh.measures[e] * (chi[nodes].mean() + delta) * np.sum(eps * eps)
    assert np.sqrt(np.sum(mesh.measures * np.sum(eta_q ** 2, axis=(1, 2)))) == pytest.approx(np.sqrt(total), rel=1e-12)


def test_korn_constant_in_1d_is_exact():
    model = MaterialModel(lambda1=0.7, lambda2=1.1)
    res = dg.korn_check(build_mesh(1, 1.0, 32), model, n_samples=20)
    assert res["C1_emp"] == pytest.approx(0.7 + 2.2, rel=1e-12)
    assert res["ok"]


def test_korn_constant_positive_in_2d():
    res = dg.korn_check(build_mesh(2, 1.0, 8), MaterialModel(), n_samples=40)
    assert 0 < res["C1_emp"] <= 3.0 + 1e-12
    assert res["ok"]


def test_ledger_check_flags_corruption():
    tr = run(presets.reference("reversible", n=16, T=0.002, tau=1e-3))
    assert dg.energy_ledger_check(tr.reports, mu=0)["ok"]
    tr.reports[1].slack += 1e-3
    res = dg.energy_ledger_check(tr.reports, mu=0)
    assert not res["ok"]
    assert res["violation"][1] > 1e-8 and res["violation"][0] <= 1e-8


def test_momentum_residual_small_and_detects_tampering():
    cfg = presets.complete_damage(n=16, T=0.01, tau=2.5e-3)
    tr = run(cfg)
    res = dg.momentum_residual(tr, cfg.material.delta)
    assert res.max() <= 1e-10
    tr.states[2].u[5] += 1e-3
    assert dg.momentum_residual(tr, cfg.material.delta).max() > 1e-6


def test_literal_residual_of_order_delta():
    vals = []
    for d in (1e-1, 1e-2):
        cfg = presets.complete_damage(n=16, T=0.01, tau=2.5e-3, delta=d)
        vals.append(dg.momentum_residual(run(cfg), d, literal=True).max())
    assert vals[1] < vals[0]


def test_continuous_dependence_symmetric():
    cfg = presets.continuous_dependence(n=16, T=0.004, tau=1e-3)
    rep = dg.continuous_dependence_experiment(cfg, [1e-2, 1e-3])
    for row in rep["table"]:
        assert row["lhs"] == pytest.approx(row["lhs_swapped"], rel=1e-14)
        assert row["rhs"] > 0


def test_fitted_rate():
    x = np.array([0.1, 0.05, 0.025])
    assert dg.fitted_rate(x, 3 * x ** 2) == pytest.approx(2.0)


def test_discrete_norms(mesh1d):
    one = np.ones(mesh1d.n_nodes)
    assert dg.l2(one, mesh1d) == pytest.approx(1.0)
    x = mesh1d.nodes[:, 0]
    # |x|^4 lumped + |1|^4
    expected = (mesh1d.lumped @ x ** 4 + 1.0) ** 0.25
    assert dg.w1p(x, mesh1d, 4.0) == pytest.approx(expected)


def test_write_report(tmp_path):
    path = tmp_path / "report.json"
    dg.write_report(path, {"experiment": "x", "value": np.float64(0.1), "flags": np.array([True]),
                           "trajectories": [object()]})
    data = json.loads(path.read_text())
    assert data == {"experiment": "x", "value": 0.1, "flags": [True]}
