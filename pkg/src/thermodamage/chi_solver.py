"""Per-step phase-field update as a box-constrained convex minimization.

Each time step asks for the minimizer of

    E(chi) = sum_i m_i [ (chi_i - chi_prev_i)^2 / (2 tau) + What(chi_i) + h_i chi_i ]
             + Phi(chi)

over a nodal box ``lower <= chi <= upper``.  ``What`` is the smooth part of
the phase potential (``gamma_hat``, plus the entropy in ``log`` mode or the
Yosida penalty ``min(chi, 0)^2 / (2 tau)`` in ``yosida`` mode) and ``Phi``
is the discrete gradient energy.  Indicator functions are encoded as the
box.  The solver starts with spectral projected gradient steps in the
lumped-mass metric and switches to two-metric projected Newton steps.

Sign convention for the recovered multipliers: with ``G`` the mass-scaled
gradient of ``E``, stationarity reads ``G + xi + zeta = 0``.  ``xi <= 0`` is
carried by nodes at the lower bound and ``zeta >= 0`` by nodes at the upper
bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import Mesh
from .linsolve import cg_solve
from .operators import discrete_phi, p_laplacian_hessian, p_laplacian_residual

MODES = ("box", "log", "yosida")
# interior clip for the open box of the logarithmic potential
LOG_CLIP = 1e-12


def yosida_beta(x, tau):
    """Yosida regularization of the subdifferential of the indicator of [0, inf)."""
    return np.minimum(np.asarray(x, dtype=float), 0.0) / tau


def yosida_beta_hat(x, tau):
    """Primitive of :func:`yosida_beta` vanishing on [0, inf)."""
    m = np.minimum(np.asarray(x, dtype=float), 0.0)
    return m * m / (2.0 * tau)


@dataclass
class ChiStepProblem:
    """Data of one phase-field step.

    ``lower``/``upper`` are nodal arrays (``-inf``/``inf`` allowed).  In
    ``log`` mode the box is (0, 1) and iterates are kept a distance
    ``LOG_CLIP`` away from the endpoints.
    """

    mesh: Mesh
    model: object
    chi_prev: np.ndarray
    tau: float
    h_field: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    mode: str = "box"

    def __post_init__(self):
        n = self.mesh.n_nodes
        self.chi_prev = np.asarray(self.chi_prev, dtype=float)
        self.h_field = np.broadcast_to(np.asarray(self.h_field, dtype=float), (n,)).copy()
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bound exceeds upper bound")
        if self.mode == "log":
            self.lower = np.maximum(self.lower, LOG_CLIP)
            self.upper = np.minimum(self.upper, 1.0 - LOG_CLIP)

    # -- factories --------------------------------------------------------
    @classmethod
    def irreversible(cls, mesh, model, chi_prev, tau, h_field):
        return cls(mesh, model, chi_prev, tau, h_field, 0.0, chi_prev, "box")

    @classmethod
    def reversible(cls, mesh, model, chi_prev, tau, h_field):
        mode = "log" if model.W == "log" else "box"
        lo, hi = model.feasible_interval()
        return cls(mesh, model, chi_prev, tau, h_field, lo, hi, mode)

    @classmethod
    def isothermal_irreversible(cls, mesh, model, chi_prev, tau, h_field):
        return cls(mesh, model, chi_prev, tau, h_field, -np.inf, chi_prev, "yosida")

    def project(self, chi):
        return np.minimum(np.maximum(chi, self.lower), self.upper)

    def feasible(self, chi) -> bool:
        return bool(np.all(chi >= self.lower) and np.all(chi <= self.upper))


# -- energy and gradient -----------------------------------------------------

def _smooth_nodal(chi, prob):
    """Nodal density of the smooth potential and its derivative."""
    model = prob.model
    val = model.gamma_hat(chi)
    der = model.gamma(chi)
    if prob.mode == "log":
        val = val + model.beta_hat(chi)
        der = der + model.beta_log(chi)
    elif prob.mode == "yosida":
        val = val + yosida_beta_hat(chi, prob.tau)
        der = der + yosida_beta(chi, prob.tau)
    return val, der


def chi_energy(chi, prob: ChiStepProblem) -> float:
    """Discrete step functional; ``+inf`` outside the box."""
    chi = np.asarray(chi, dtype=float)
    if not prob.feasible(chi):
        return np.inf
    m = prob.mesh.lumped
    val, _ = _smooth_nodal(chi, prob)
    dchi = chi - prob.chi_prev
    nodal = dchi * dchi / (2.0 * prob.tau) + val + prob.h_field * chi
    return float(m @ nodal) + discrete_phi(chi, prob.mesh, prob.model)


def chi_energy_gradient(chi, prob: ChiStepProblem) -> np.ndarray:
    """Euclidean gradient of :func:`chi_energy` (smooth part, ignoring the box)."""
    m = prob.mesh.lumped
    _, der = _smooth_nodal(chi, prob)
    nodal = (chi - prob.chi_prev) / prob.tau + der + prob.h_field
    return m * nodal + p_laplacian_residual(chi, prob.mesh, prob.model)


def scaled_gradient(chi, prob: ChiStepProblem) -> np.ndarray:
    """Gradient in the lumped-mass metric: the nodal residual of the step equation."""
    return chi_energy_gradient(chi, prob) / prob.mesh.lumped


def projected_gradient_residual(chi, prob: ChiStepProblem) -> float:
    G = scaled_gradient(chi, prob)
    return float(np.max(np.abs(chi - prob.project(chi - G))))


# -- solver ----------------------------------------------------------------------

@dataclass
class ChiReport:
    iterations: int
    residual: float
    converged: bool
    energy: float
    energy_prev: float
    xi: np.ndarray = field(repr=False)
    zeta: np.ndarray = field(repr=False)
    gradient: np.ndarray = field(repr=False)


def split_multipliers(chi, G, prob: ChiStepProblem):
    """Attribute the stationarity defect ``-G`` to the active bounds.

    Returns ``(xi, zeta)``: ``xi`` lives on nodes at the lower bound,
    ``zeta`` on nodes at the upper bound.  When both bounds coincide the
    sign of ``G`` decides.
    """
    at_lo = chi <= prob.lower
    at_hi = chi >= prob.upper
    both = at_lo & at_hi
    lo_only = at_lo & ~both
    hi_only = at_hi & ~both
    xi = np.zeros_like(chi)
    zeta = np.zeros_like(chi)
    xi[lo_only] = -G[lo_only]
    zeta[hi_only] = -G[hi_only]
    push_down = both & (G > 0)
    xi[push_down] = -G[push_down]
    zeta[both & ~push_down] = -G[both & ~push_down]
    if prob.mode == "log":
        xi[:] = 0.0
        zeta[:] = 0.0
    return xi, zeta


def chi_energy_hessian(chi, prob: ChiStepProblem):
    """Sparse Hessian of the smooth part, with the nodal curvature floored.

    The nodal curvature ``m (1/tau + gamma' + ...)`` is bounded below by
    ``m / (2 tau)`` so the matrix stays positive definite even when
    ``gamma_hat`` is concave.
    """
    model = prob.model
    curv = 1.0 / prob.tau + model.gamma_prime(chi)
    if prob.mode == "log":
        curv = curv + model.beta_log_prime(chi)
    elif prob.mode == "yosida":
        curv = curv + (chi < 0) / prob.tau
    curv = np.maximum(curv, 0.5 / prob.tau)
    H = p_laplacian_hessian(chi, prob.mesh, model)
    return (H + sp.diags(prob.mesh.lumped * curv)).tocsr()


def minimize_chi(prob: ChiStepProblem, tol: float = 1e-8, max_iter: int = 500,
                 chi0=None, armijo: float = 1e-4, spg_iter: int = 20) -> tuple[np.ndarray, ChiReport]:
    """Minimize the step functional over the box.

    A few spectral projected gradient steps (Barzilai-Borwein length in the
    lumped-mass metric, monotone Armijo backtracking) are followed by
    two-metric projected Newton steps: Newton-CG on the nodes away from
    active bounds, scaled gradient steps on the rest, with an Armijo search
    along the projection arc.

    Parameters
    ----------
    prob : ChiStepProblem
    tol : float
        Target for ``||chi - P(chi - G)||_inf`` with ``G`` the mass-scaled
        gradient (the nodal residual of the step equation).
    max_iter : int
        Total iteration cap (both phases).
    chi0 : ndarray, optional
        Starting point, defaults to the projection of ``chi_prev``.
    spg_iter : int
        Number of gradient iterations before Newton steps start.

    Returns
    -------
    chi : ndarray
        Feasible to the last bit (explicit clamp).
    report : ChiReport
    """
    m = prob.mesh.lumped
    x = prob.project(prob.chi_prev if chi0 is None else np.asarray(chi0, dtype=float))
    e_start = chi_energy(prob.project(prob.chi_prev), prob)
    e = chi_energy(x, prob)
    g = chi_energy_gradient(x, prob)
    G = g / m
    alpha = prob.tau
    it = 0
    res = float(np.max(np.abs(x - prob.project(x - G))))
    while res > tol and it < max_iter:
        xn = None
        if it >= spg_iter:
            xn, en = _newton_step(x, e, g, G, res, prob, armijo)
        if xn is None:
            xn, en = _gradient_step(x, e, g, G, alpha, prob, armijo)
        if xn is None:
            break  # no decrease possible at machine precision
        gn = chi_energy_gradient(xn, prob)
        s = xn - x
        sy = s @ (gn - g)
        alpha = float(np.clip((s @ (m * s)) / sy, 1e-14, 1e14)) if sy > 0 else prob.tau
        x, e, g = xn, en, gn
        G = g / m
        it += 1
        res = float(np.max(np.abs(x - prob.project(x - G))))

    x = _snap_to_bounds(x, G, prob, tol)
    e = chi_energy(x, prob)
    G = scaled_gradient(x, prob)
    res = float(np.max(np.abs(x - prob.project(x - G))))
    xi, zeta = split_multipliers(x, G, prob)
    return x, ChiReport(it, res, res <= tol, e, e_start, xi, zeta, G)


def _gradient_step(x, e, g, G, alpha, prob, armijo):
    d = prob.project(x - alpha * G) - x
    gd = g @ d
    lam = 1.0
    while lam > 1e-20:
        xn = prob.project(x + lam * d)
        en = chi_energy(xn, prob)
        if en <= e + armijo * lam * gd:
            return xn, en
        lam *= 0.5
    return None, None


def _newton_step(x, e, g, G, res, prob, armijo):
    eps = min(1e-3, res)
    to_lo = (x - prob.lower <= eps) & (G > 0)
    to_hi = (prob.upper - x <= eps) & (G < 0)
    active = to_lo | to_hi
    free = ~active
    # nodes pushed against a nearby bound go onto it; a plain gradient move
    # would leave them hovering while the free nodes shift under them
    d = np.zeros_like(x)
    d[to_lo] = prob.lower[to_lo] - x[to_lo]
    d[to_hi] = prob.upper[to_hi] - x[to_hi]
    if np.any(free):
        H = chi_energy_hessian(x, prob)
        idx = np.flatnonzero(free)
        Hff = H[idx][:, idx]
        d[idx], _ = cg_solve(Hff, -g[idx], tol=1e-12, max_iter=20 * idx.size)
    lam = 1.0
    while lam > 1e-12:
        xn = prob.project(x + lam * d)
        en = chi_energy(xn, prob)
        # Armijo test along the projection arc
        if en <= e + armijo * (g @ (xn - x)) and en <= e:
            return xn, en
        if lam == 1.0 and en - e <= 1e-14 * max(1.0, abs(e)):
            # energy differences are below round-off: judge by the residual
            Gn = scaled_gradient(xn, prob)
            if np.max(np.abs(xn - prob.project(xn - Gn))) < 0.5 * res:
                return xn, min(en, e)
        lam *= 0.5
    return None, None


def _snap_to_bounds(x, G, prob, tol):
    """Move nodes that sit within ``tol`` of a bound they are pushed against onto it."""
    x = x.copy()
    near_lo = (x - prob.lower <= tol) & (G > 0)
    near_hi = (prob.upper - x <= tol) & (G < 0)
    x[near_lo] = prob.lower[near_lo]
    x[near_hi] = prob.upper[near_hi]
    return prob.project(x)


def chi_semilinear_step(prob: ChiStepProblem, tol: float = 1e-8, max_iter: int = 500, chi0=None):
    """Reversible update: same minimization, returning ``(chi, xi, report)``.

    ``xi`` is the multiplier of the box [0, 1] (zero in ``log`` mode): it is
    ``<= 0`` on nodes with ``chi = 0``, ``>= 0`` on nodes with ``chi = 1``
    and vanishes elsewhere.
    """
    chi, rep = minimize_chi(prob, tol=tol, max_iter=max_iter, chi0=chi0)
    return chi, rep.xi + rep.zeta, rep


def one_sided_vi_residual(chi, prob: ChiStepProblem, xi=None) -> float:
    """Worst violation of the one-sided phase inequality.

    The step equation tested with nonpositive nodal directions ``-e_i``
    requires ``G_i + xi_i <= 0`` where ``G`` is the nodal residual (rate,
    gradient, potential and driving terms) and ``xi`` the multiplier of the
    lower bound.  Returns ``max_i (G_i + xi_i)^+``.
    """
    chi = np.asarray(chi, dtype=float)
    G = scaled_gradient(chi, prob)
    if xi is None:
        xi, _ = split_multipliers(chi, G, prob)
    return float(np.max(np.maximum(G + xi, 0.0), initial=0.0))


# -- brute-force oracle ----------------------------------------------------------

def _grid_levels(lo, hi, n_levels):
    return np.linspace(lo, hi, n_levels)


def _chain_min(levels, prob):
    """Exact minimum of the step functional over a product grid on a 1D chain.

    ``levels[i]`` are the candidate values of node ``i``.  The functional
    splits into nodal terms plus one term per element, so dynamic
    programming along the chain is exact.
    """
    mesh, model = prob.mesh, prob.model
    m = mesh.lumped
    n = mesh.n_nodes
    unary = []
    for i in range(n):
        c = levels[i]
        val, _ = _smooth_nodal(c, prob)
        unary.append(m[i] * ((c - prob.chi_prev[i]) ** 2 / (2 * prob.tau) + val + prob.h_field[i] * c))
    cost = unary[0].copy()
    back = []
    for e in range(n - 1):
        a, b = mesh.elements[e]
        hlen = mesh.measures[e]
        slope = (levels[b][None, :] - levels[a][:, None]) / hlen
        pair = hlen * model.phi_density(slope[..., None])
        tot = cost[:, None] + pair
        arg = np.argmin(tot, axis=0)
        back.append(arg)
        cost = tot[arg, np.arange(tot.shape[1])] + unary[b]
    j = int(np.argmin(cost))
    best = float(cost[j])
    idx = [j]
    for arg in reversed(back):
        j = int(arg[j])
        idx.append(j)
    idx.reverse()
    chi = np.array([levels[i][idx[i]] for i in range(n)])
    return chi, best


def brute_force_minimize(prob: ChiStepProblem, n_levels: int = 31, refinements: int = 2,
                         window=(-1.0, 2.0)):
    """Exhaustive grid search oracle for 1D problems.

    Each node ranges over ``n_levels`` equispaced values of its box
    (infinite bounds are replaced by ``window``).  Every refinement
    re-grids ``+- 2`` spacings around the incumbent, clipped to the box.
    """
    if prob.mesh.dim != 1:
        raise ValueError("brute-force oracle supports 1D meshes only")
    lo = np.where(np.isfinite(prob.lower), prob.lower, window[0])
    hi = np.where(np.isfinite(prob.upper), prob.upper, window[1])
    levels = [_grid_levels(lo[i], hi[i], n_levels) for i in range(prob.mesh.n_nodes)]
    chi, best = _chain_min(levels, prob)
    spacing = (hi - lo) / (n_levels - 1)
    for _ in range(refinements):
        a = np.maximum(chi - 2 * spacing, lo)
        b = np.minimum(chi + 2 * spacing, hi)
        levels = [np.unique(np.append(_grid_levels(a[i], b[i], n_levels), chi[i]))
                  for i in range(prob.mesh.n_nodes)]
        chi, best = _chain_min(levels, prob)
        spacing = (b - a) / (n_levels - 1)
    return chi, best
