"""Structured P1 meshes on intervals and rectangles.

Nodal scalar fields are plain ``(n_nodes,)`` arrays, vector fields are
``(n_nodes, dim)`` arrays and symmetric tensor fields are ``(n_elements, dim,
dim)`` arrays (the symmetric gradient of a P1 field is element-wise constant).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Simplicial mesh with precomputed P1 geometry.

    Attributes
    ----------
    dim : int
        Spatial dimension (1 or 2).
    nodes : ndarray, shape (n_nodes, dim)
    elements : ndarray of int, shape (n_elements, dim + 1)
    boundary : ndarray of int
        Sorted indices of the nodes lying on the boundary of the box.
    measures : ndarray, shape (n_elements,)
    grads : ndarray, shape (n_elements, dim + 1, dim)
        Gradients of the local P1 basis functions.
    extent : tuple of float
    """

    dim: int
    nodes: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    measures: np.ndarray
    grads: np.ndarray
    extent: tuple
    lumped: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary] = False
        return mask

    def element_average(self, nodal: np.ndarray) -> np.ndarray:
        """Arithmetic mean of nodal values over each element."""
        return np.asarray(nodal)[self.elements].mean(axis=1)

    def nodal_average(self, per_element: np.ndarray) -> np.ndarray:
        """Lumped L2 projection of an element-wise constant onto the nodes.

        Node ``i`` receives ``sum_{e ni i} |e| q_e / (dim + 1)`` divided by the
        lumped mass ``m_i``, so ``sum_i m_i out_i == sum_e |e| q_e`` exactly.
        """
        share = np.asarray(per_element) * self.measures / (self.dim + 1)
        out = np.zeros(self.n_nodes)
        np.add.at(out, self.elements, share[:, None])
        return out / self.lumped


def _p1_geometry(nodes, elements):
    dim = nodes.shape[1]
    verts = nodes[elements]  # (E, dim+1, dim)
    jac = (verts[:, 1:, :] - verts[:, :1, :]).transpose(0, 2, 1)  # columns = edges
    det = np.linalg.det(jac) if dim > 1 else jac[:, 0, 0]
    fact = {1: 1.0, 2: 2.0}[dim]
    measures = np.abs(det) / fact
    # reference gradients: phi_0 = 1 - sum xi, phi_j = xi_j; grad xi_d is row d of J^{-1}
    ref = np.vstack([-np.ones((1, dim)), np.eye(dim)])  # (dim+1, dim)
    grads = np.einsum("ad,edk->eak", ref, np.linalg.inv(jac))
    return measures, grads


def build_mesh(dim: int, extent, n) -> Mesh:
    """Uniform mesh of ``[0, L]`` or ``[0, Lx] x [0, Ly]``.

    In 2D every cell is split into two right triangles along the same
    diagonal.

    Parameters
    ----------
    dim : {1, 2}
    extent : float or sequence of float
        Side lengths.
    n : int or sequence of int
        Number of cells per axis, at least 2.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    extent = tuple(float(v) for v in np.broadcast_to(np.atleast_1d(extent), (dim,)))
    n = tuple(int(v) for v in np.broadcast_to(np.atleast_1d(n), (dim,)))
    if any(v < 2 for v in n):
        raise ValueError(f"need at least 2 cells per axis, got {n}")
    if any(not np.isfinite(v) or v <= 0 for v in extent):
        raise ValueError(f"extent must be positive, got {extent}")

    if dim == 1:
        nodes = np.linspace(0.0, extent[0], n[0] + 1)[:, None]
        elements = np.column_stack([np.arange(n[0]), np.arange(1, n[0] + 1)])
        boundary = np.array([0, n[0]])
    else:
        nx, ny = n
        xs = np.linspace(0.0, extent[0], nx + 1)
        ys = np.linspace(0.0, extent[1], ny + 1)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
        a = idx[:-1, :-1].ravel()
        b = idx[:-1, 1:].ravel()
        c = idx[1:, 1:].ravel()
        d = idx[1:, :-1].ravel()
        # counter-clockwise triangles (a, b, c) and (a, c, d)
        elements = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
        on_bdry = (
            np.isclose(nodes[:, 0], 0.0) | np.isclose(nodes[:, 0], extent[0])
            | np.isclose(nodes[:, 1], 0.0) | np.isclose(nodes[:, 1], extent[1])
        )
        boundary = np.flatnonzero(on_bdry)

    measures, grads = _p1_geometry(nodes, elements)
    lumped = np.zeros(nodes.shape[0])
    np.add.at(lumped, elements, (measures / (dim + 1))[:, None])
    return Mesh(dim=dim, nodes=nodes, elements=elements, boundary=boundary,
                measures=measures, grads=grads, extent=extent, lumped=lumped)


def _check_nodal(values, mesh, ncomp=None):
    values = np.asarray(values, dtype=float)
    expected = (mesh.n_nodes,) if ncomp is None else (mesh.n_nodes, ncomp)
    if values.shape != expected:
        raise ValueError(f"field shape {values.shape} does not match mesh {expected}")
    return values


def gradient(values, mesh: Mesh) -> np.ndarray:
    """Element-wise gradient of a nodal P1 field, shape (n_elements, dim)."""
    values = _check_nodal(values, mesh)
    return np.einsum("ea,eak->ek", values[mesh.elements], mesh.grads)


def displacement_gradient(u, mesh: Mesh) -> np.ndarray:
    """Element-wise ``G[e, i, j] = d u_i / d x_j`` of a nodal vector field."""
    u = _check_nodal(u, mesh, mesh.dim)
    return np.einsum("eai,eaj->eij", u[mesh.elements], mesh.grads)


def symmetric_gradient(u, mesh: Mesh) -> np.ndarray:
    """Linearized strain ``(grad u + grad u^T) / 2`` per element."""
    G = displacement_gradient(u, mesh)
    return 0.5 * (G + G.transpose(0, 2, 1))


def divergence(u, mesh: Mesh) -> np.ndarray:
    """Element-wise divergence of a nodal vector field."""
    return np.trace(displacement_gradient(u, mesh), axis1=1, axis2=2)


def integrate(values, mesh: Mesh) -> float:
    """Integrate a per-element constant (exact) or a nodal field (lumped)."""
    values = np.asarray(values, dtype=float)
    if values.shape == (mesh.n_elements,) and mesh.n_elements != mesh.n_nodes:
        return float(values @ mesh.measures)
    if values.shape == (mesh.n_nodes,):
        return float(values @ mesh.lumped)
    raise ValueError(f"cannot integrate array of shape {values.shape}")


# -- snapshots --------------------------------------------------------------

def write_snapshot(path, mesh: Mesh, fields: dict, time: float) -> None:
    """Write nodal fields as ``node_index x [y] value...`` text columns.

    Vector fields are expanded into one column per component (``u_0``,
    ``u_1``).  All floats use 17 significant digits so that reading the
    file back reproduces the arrays bit for bit.
    """
    cols, names = [], []
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            cols.append(arr)
            names.append(name)
        else:
            for c in range(arr.shape[1]):
                cols.append(arr[:, c])
                names.append(f"{name}_{c}")
    coord_names = ["x", "y"][: mesh.dim]
    with open(path, "w") as fh:
        fh.write(f"# fields={','.join(names)} t={time!r}\n")
        fh.write("# node_index " + " ".join(coord_names + names) + "\n")
        data = np.column_stack([mesh.nodes] + cols) if cols else mesh.nodes
        for i, row in enumerate(data):
            fh.write(str(i) + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(time, coords, columns)``."""
    with open(path) as fh:
        header = fh.readline()
        colline = fh.readline().split()[2:]
        rows = [line.split() for line in fh if line.strip()]
    time = float(header.rsplit("t=", 1)[1])
    data = np.array([[float(v) for v in r[1:]] for r in rows])
    ncoord = sum(1 for c in colline if c in ("x", "y"))
    coords = data[:, :ncoord]
    columns = {name: data[:, ncoord + j] for j, name in enumerate(colline[ncoord:])}
    return time, coords, columns
