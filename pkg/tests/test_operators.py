import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from thermodamage import operators as ops
from thermodamage.grid import build_mesh, symmetric_gradient
from thermodamage.material import MaterialModel


def test_w_diffusion_two_elements():
    mesh = build_mesh(1, 1.0, 2)
    A = ops.assemble_w_diffusion(np.ones(3), mesh).toarray()
    np.testing.assert_allclose(A, [[2, -2, 0], [-2, 4, -2], [0, -2, 2]])


def test_w_diffusion_rejects_nonpositive_conductivity(mesh1d):
    with pytest.raises(ValueError):
        ops.assemble_w_diffusion(np.zeros(mesh1d.n_nodes), mesh1d)


def test_elastic_1d_stiffness():
    mesh = build_mesh(1, 1.0, 2)
    model = MaterialModel(lambda1=1.0, lambda2=0.5)
    E = ops.assemble_elastic(1.0, mesh, model).toarray()
    # (l1 + 2 l2) / h * [[1, -1], [-1, 1]] per element, h = 1/2
    np.testing.assert_allclose(E, 4.0 * np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]]))


def test_elastic_form_matches_quadrature(mesh2d, rng):
    model = MaterialModel(lambda1=0.7, lambda2=1.3)
    eta = rng.uniform(0.1, 2.0, mesh2d.n_nodes)
    u = rng.standard_normal((mesh2d.n_nodes, 2))
    E = ops.assemble_elastic(eta, mesh2d, model)
    eps = symmetric_gradient(u, mesh2d)
    direct = np.sum(mesh2d.measures * mesh2d.element_average(eta) * model.elastic_density(eps))
    assert u.ravel() @ (E @ u.ravel()) == pytest.approx(direct, rel=1e-12)


def test_rigid_motions_in_kernel(mesh2d):
    E = ops.assemble_elastic(1.0, mesh2d, MaterialModel())
    x, y = mesh2d.nodes.T
    for u in (np.column_stack([np.ones_like(x), 0 * x]), np.column_stack([-y, x])):
        np.testing.assert_allclose(E @ u.ravel(), 0.0, atol=1e-12)


def test_assembly_symmetric(mesh2d, rng):
    eta = rng.uniform(0.0, 1.0, mesh2d.n_nodes)
    for A in (ops.assemble_viscous(eta, mesh2d, MaterialModel()), ops.assemble_w_diffusion(eta + 0.1, mesh2d)):
        assert abs(A - A.T).max() < 1e-14


def test_negative_weight_rejected(mesh1d):
    with pytest.raises(ValueError):
        ops.assemble_elastic(-np.ones(mesh1d.n_nodes), mesh1d, MaterialModel())


@pytest.mark.parametrize("s", [0.5, -1.0, 2.0])
def test_p_laplacian_single_element(s):
    mesh = build_mesh(1, 1.0, 2)
    model = MaterialModel(p=4.0)
    chi = np.array([0.0, 0.5 * s, s])
    r = ops.p_laplacian_residual(chi, mesh, model)
    # constant slope s: flux s^3, interior node balanced
    np.testing.assert_allclose(r, [-s ** 3, 0.0, s ** 3], atol=1e-14)
    assert ops.discrete_phi(chi, mesh, model) == pytest.approx(s ** 4 / 4)


@pytest.mark.parametrize("phi", ["power", "regularized"])
@pytest.mark.parametrize("dim", [1, 2])
def test_p_laplacian_hessian_matches_differences(phi, dim, rng):
    mesh = build_mesh(dim, 1.0, 4 if dim == 1 else 3)
    model = MaterialModel(p=3.0, phi=phi)
    chi = rng.uniform(0, 1, mesh.n_nodes)
    H = ops.p_laplacian_hessian(chi, mesh, model).toarray()
    h = 1e-6
    fd = np.column_stack([
        (ops.p_laplacian_residual(chi + h * e, mesh, model) - ops.p_laplacian_residual(chi - h * e, mesh, model)) / (2 * h)
        for e in np.eye(mesh.n_nodes)
    ])
    np.testing.assert_allclose(H, fd, atol=1e-6 * np.abs(H).max())
    assert np.linalg.eigvalsh(H).min() > -1e-12


def test_coupling_vector_matches_apply(mesh2d, rng):
    model = MaterialModel(rho=0.7)
    theta = rng.uniform(0, 2, mesh2d.n_nodes)
    v = rng.standard_normal((mesh2d.n_nodes, 2))
    c = ops.thermal_coupling_vector(theta, mesh2d, model)
    assert c @ v.ravel() == pytest.approx(ops.thermal_coupling_apply(theta, v, mesh2d, model), rel=1e-12)


def test_coupling_zero_without_expansion(mesh1d):
    model = MaterialModel(rho=0.0)
    assert ops.thermal_coupling_apply(np.ones(mesh1d.n_nodes), np.ones((mesh1d.n_nodes, 1)), mesh1d, model) == 0.0


def test_dirichlet_elimination(mesh2d, rng):
    A = ops.assemble_elastic(1.0, mesh2d, MaterialModel()) + sp.eye(2 * mesh2d.n_nodes)
    b = rng.standard_normal(A.shape[0])
    dofs = ops.dirichlet_dofs(mesh2d)
    A2, b2 = ops.eliminate_dirichlet(A, b, dofs)
    assert np.all(b2[dofs] == 0)
    x = np.linalg.solve(A2.toarray(), b2)
    np.testing.assert_allclose(x[dofs], 0.0, atol=1e-14)
    assert abs(A2 - A2.T).max() < 1e-14


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-2.0, 2.0))
def test_phi_is_even_and_nonnegative(scale, shift):
    mesh = build_mesh(1, 1.0, 3)
    model = MaterialModel(p=4.0)
    chi = scale * np.array([0.0, 1.0, -0.5, 0.2]) + shift
    val = ops.discrete_phi(chi, mesh, model)
    assert val >= 0
    assert ops.discrete_phi(-chi, mesh, model) == pytest.approx(val)
