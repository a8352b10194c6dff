"""Sparse assembly of the discrete spatial operators.

Vector fields are flattened node-major, so degree of freedom ``i * dim + c``
is component ``c`` at node ``i`` (this is ``u.ravel()`` for an
``(n_nodes, dim)`` array).  Nodal weights entering bilinear forms are
averaged per element.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import Mesh, gradient, divergence


def _csr(rows, cols, vals, n):
    # COO -> CSR sums duplicates in a fixed order, keeping assembly deterministic
    A = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


def _element_weight(weight, mesh, what):
    weight = np.asarray(weight, dtype=float)
    if weight.shape == ():
        weight = np.full(mesh.n_nodes, float(weight))
    if weight.shape != (mesh.n_nodes,):
        raise ValueError(f"{what} must be a nodal field")
    return weight, mesh.element_average(weight)


def assemble_isotropic(eta, mesh: Mesh, l1: float, l2: float) -> sp.csr_matrix:
    """Matrix of ``int eta (l1 div u div v + 2 l2 eps(u):eps(v))``."""
    eta, eta_e = _element_weight(eta, mesh, "weight")
    if np.any(eta < 0):
        raise ValueError("negative weight in elastic/viscous form")
    d, nl = mesh.dim, mesh.dim + 1
    B = mesh.grads  # (E, a, k)
    BB = np.einsum("eak,ebk->eab", B, B)
    eye = np.eye(d)
    # local[e, a, c, b, d]
    local = (
        l1 * np.einsum("eac,ebd->eacbd", B, B)
        + l2 * (np.einsum("eab,cd->eacbd", BB, eye) + np.einsum("ead,ebc->eacbd", B, B))
    )
    local *= (mesh.measures * eta_e)[:, None, None, None, None]
    dofs = (mesh.elements[:, :, None] * d + np.arange(d)[None, None, :]).reshape(-1, nl * d)
    rows = np.repeat(dofs, nl * d, axis=1)
    cols = np.tile(dofs, (1, nl * d))
    return _csr(rows, cols, local.reshape(-1, nl * d * nl * d), mesh.n_nodes * d)


def assemble_elastic(eta, mesh: Mesh, model) -> sp.csr_matrix:
    return assemble_isotropic(eta, mesh, model.lambda1, model.lambda2)


def assemble_viscous(eta, mesh: Mesh, model) -> sp.csr_matrix:
    return assemble_isotropic(eta, mesh, model.ell1, model.ell2)


def assemble_w_diffusion(K_vals, mesh: Mesh) -> sp.csr_matrix:
    """Matrix of ``int K grad w . grad v`` with ``K`` averaged per element."""
    K, K_e = _element_weight(K_vals, mesh, "conductivity")
    if np.any(K <= 0):
        raise ValueError("conductivity values must be positive")
    nl = mesh.dim + 1
    local = np.einsum("eak,ebk->eab", mesh.grads, mesh.grads) * (mesh.measures * K_e)[:, None, None]
    rows = np.repeat(mesh.elements, nl, axis=1)
    cols = np.tile(mesh.elements, (1, nl))
    return _csr(rows, cols, local.reshape(-1, nl * nl), mesh.n_nodes)


def lumped_mass(mesh: Mesh, ncomp: int = 1) -> sp.dia_matrix:
    """Row-sum lumped P1 mass matrix, optionally repeated per vector component."""
    return sp.diags(np.repeat(mesh.lumped, ncomp))


def discrete_phi(chi, mesh: Mesh, model) -> float:
    """``sum_e |e| phi(grad chi_e)``."""
    return float(model.phi_density(gradient(chi, mesh)) @ mesh.measures)


def p_laplacian_residual(chi, mesh: Mesh, model) -> np.ndarray:
    """Gradient of :func:`discrete_phi`: ``r_i = int d(grad chi) . grad phi_i``."""
    flux = model.flux_d(gradient(chi, mesh))  # (E, dim)
    contrib = np.einsum("ek,eak->ea", flux, mesh.grads) * mesh.measures[:, None]
    r = np.zeros(mesh.n_nodes)
    np.add.at(r, mesh.elements, contrib)
    return r


def _flux_jacobian(chi, mesh, model):
    """Per-element Jacobian ``d'(grad chi)``, shape (E, dim, dim)."""
    g = gradient(chi, mesh)
    s = np.sum(g * g, axis=-1)
    base = s if model.phi == "power" else 1.0 + s
    p = model.p
    # d'(z) = base^{(p-2)/2} I + (p-2) base^{(p-4)/2} z z^T
    c_iso = base ** ((p - 2.0) / 2.0)
    safe = np.where(base > 0, base, 1.0)
    c_rank1 = np.where(base > 0, (p - 2.0) * safe ** ((p - 4.0) / 2.0), 0.0)
    eye = np.eye(mesh.dim)
    return c_iso[:, None, None] * eye + c_rank1[:, None, None] * np.einsum("ek,el->ekl", g, g)


def p_laplacian_hessian(chi, mesh: Mesh, model) -> sp.csr_matrix:
    """Jacobian of :func:`p_laplacian_residual` (symmetric positive semidefinite)."""
    J = _flux_jacobian(chi, mesh, model)
    nl = mesh.dim + 1
    local = np.einsum("eak,ekl,ebl->eab", mesh.grads, J, mesh.grads) * mesh.measures[:, None, None]
    rows = np.repeat(mesh.elements, nl, axis=1)
    cols = np.tile(mesh.elements, (1, nl))
    return _csr(rows, cols, local.reshape(-1, nl * nl), mesh.n_nodes)


def thermal_coupling_apply(theta, v, mesh: Mesh, model) -> float:
    """``-rho int theta div v`` with ``theta`` averaged per element."""
    if model.rho == 0:
        return 0.0
    return float(-model.rho * np.sum(mesh.measures * mesh.element_average(theta) * divergence(v, mesh)))


def thermal_coupling_vector(theta, mesh: Mesh, model) -> np.ndarray:
    """Vector ``c`` with ``c @ v.ravel() == thermal_coupling_apply(theta, v)``."""
    d = mesh.dim
    out = np.zeros((mesh.n_nodes, d))
    if model.rho == 0:
        return out.ravel()
    wt = -model.rho * mesh.measures * mesh.element_average(theta)
    np.add.at(out, mesh.elements, wt[:, None, None] * mesh.grads)
    return out.ravel()


def dirichlet_dofs(mesh: Mesh) -> np.ndarray:
    """Flattened vector dofs of all boundary nodes."""
    d = mesh.dim
    return (mesh.boundary[:, None] * d + np.arange(d)[None, :]).ravel()


def eliminate_dirichlet(A: sp.spmatrix, b: np.ndarray, dofs: np.ndarray):
    """Impose homogeneous Dirichlet values by zeroing rows/columns.

    The eliminated diagonal entries become 1 and the right-hand side 0, so
    the reduced system stays symmetric positive definite.
    """
    n = A.shape[0]
    keep = np.ones(n)
    keep[dofs] = 0.0
    Dk = sp.diags(keep)
    A2 = (Dk @ A @ Dk + sp.diags(1.0 - keep)).tocsr()
    b2 = np.asarray(b, dtype=float) * keep
    return A2, b2
