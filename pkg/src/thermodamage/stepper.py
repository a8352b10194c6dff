"""Time-discrete schemes, initial-data preparation and the time loop.

Schemes
-------
``reversible``
    Fully implicit coupling of enthalpy and phase, solved by damped block
    Gauss-Seidel over (chi, u, w).
``reversible_expansion``
    As ``reversible`` with thermal expansion and truncated ``K_M``,
    ``Theta_M``.
``irreversible``
    Semi-implicit: phase minimization, then momentum, then enthalpy with
    the temperature lagged one step.
``isothermal_irreversible``
    Prescribed temperature, Yosida-penalized lower bound, positive parts of
    the coefficients.
``isothermal_reversible``
    Prescribed temperature, phase then momentum; used by the
    continuous-dependence study.

Energy bookkeeping
------------------
Testing the three discrete equations with ``1``, ``u^k - u^{k-1}`` and
``chi^k - chi^{k-1}`` gives, per step,

    slack := E_{k-1} + inputs - E_k - dissipation = sum of defects,

with the total energy ``E = int w + |v|^2/2 + e(b(chi); u, u)/2 + Phi(chi)
+ int W(chi)`` and the defects listed in :class:`StepReport` (``def_*``).
All of them are logged so the identity can be audited term by term.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, asdict

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from .chi_solver import ChiStepProblem, minimize_chi, one_sided_vi_residual, yosida_beta, yosida_beta_hat
from .config import SCHEMES, RunConfig, Tolerances
from .grid import Mesh, build_mesh, divergence, symmetric_gradient
from .linsolve import ConvergenceError, cg_solve

GAUSS4 = np.polynomial.legendre.leggauss(4)


class StepFailure(RuntimeError):
    """A time step could not be completed (fixed point or linear solve)."""


@dataclass
class State:
    k: int
    t: float
    w: np.ndarray
    u: np.ndarray
    u_prev: np.ndarray
    chi: np.ndarray

    def velocity(self, tau):
        return (self.u - self.u_prev) / tau

    def copy(self):
        return State(self.k, self.t, self.w.copy(), self.u.copy(), self.u_prev.copy(), self.chi.copy())


@dataclass
class Schedule:
    """Uniform time grid with data samplers ``f(t)``, ``g(t)``, ``theta_star(t)``.

    Samplers return nodal arrays; ``breakpoints`` lists times where the data
    are not smooth (local means split their quadrature there).
    """

    T: float
    tau: float
    f: object = None
    g: object = None
    theta_star: object = None
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.tau <= 0 or self.T <= 0:
            raise ValueError("T and tau must be positive")
        K = int(round(self.T / self.tau))
        if K < 1 or abs(K * self.tau - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError(f"T / tau = {self.T / self.tau!r} is not an integer")
        self.K = K

    def times(self):
        return self.tau * np.arange(self.K + 1)


def local_means(func, schedule: Schedule, breakpoints=None):
    """Per-step averages ``(1/tau) int_{t_{k-1}}^{t_k} func``, ``k = 1..K``.

    Four-point Gauss-Legendre on each subinterval, split at breakpoints, so
    piecewise polynomials up to degree 7 are integrated exactly.
    """
    if breakpoints is None:
        breakpoints = schedule.breakpoints
    xg, wg = GAUSS4
    out = []
    tau = schedule.tau
    bps = np.asarray(sorted(breakpoints), dtype=float)
    for k in range(1, schedule.K + 1):
        a, b = (k - 1) * tau, k * tau
        cuts = [a] + [t for t in bps if a < t < b] + [b]
        acc = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            for x, wq in zip(xg, wg):
                acc = acc + wq * half * np.asarray(func(mid + half * x), dtype=float)
        out.append(acc / tau)
    return np.array(out)


# -- reports --------------------------------------------------------------------

@dataclass
class StepReport:
    k: int = 0
    t: float = 0.0
    chi_iterations: int = 0
    chi_residual: float = 0.0
    chi_converged: bool = True
    vi_residual: float = 0.0
    fp_iterations: int = 0
    fp_change: float = 0.0
    cg_iterations: int = 0
    cg_residual: float = 0.0
    min_w: float = 0.0
    max_abs_w: float = 0.0
    chi_nonincreasing: bool = True
    chi_min: float = 0.0
    chi_max: float = 0.0
    # energy terms at the new time level
    energy: float = 0.0
    enthalpy_mass: float = 0.0
    kinetic: float = 0.0
    elastic: float = 0.0
    phi: float = 0.0
    W_int: float = 0.0
    # per-step dissipation and inputs
    diss_chi: float = 0.0
    diss_visc: float = 0.0
    work_f: float = 0.0
    heat_g: float = 0.0
    # slack and defects of the step identity
    slack: float = 0.0
    def_kin: float = 0.0
    def_el: float = 0.0
    def_phi: float = 0.0
    def_W: float = 0.0
    def_xi: float = 0.0
    def_b: float = 0.0
    def_coupling: float = 0.0
    defect_sum: float = 0.0
    # phase-only inequality: slack and the nonconvexity remainder
    slack_chi: float = 0.0
    remainder: float = 0.0
    energy_scale: float = 1.0

    def row(self):
        return asdict(self)


def report_columns():
    return [f.name for f in fields(StepReport)]


# -- the stepper ------------------------------------------------------------------

class Stepper:
    """Advance a :class:`State` by one step of the selected scheme."""

    def __init__(self, mesh: Mesh, model, schedule: Schedule, scheme: str,
                 tolerances: Tolerances | None = None):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.mesh, self.model, self.schedule, self.scheme = mesh, model, schedule, scheme
        self.tol = tolerances or Tolerances()
        self.tau = schedule.tau
        d = mesh.dim
        n = mesh.n_nodes
        self.m = mesh.lumped
        self.mv = np.repeat(mesh.lumped, d)
        self.dir_dofs = ops.dirichlet_dofs(mesh)
        zero_v = lambda t: np.zeros((n, d))
        zero_s = lambda t: np.zeros(n)
        self.f_means = local_means(schedule.f or zero_v, schedule)
        self.g_means = local_means(schedule.g or zero_s, schedule)
        ts = schedule.theta_star or zero_s
        self.theta_means = local_means(ts, schedule)
        self.theta_start = np.asarray(ts(0.0), dtype=float)
        self._isothermal = scheme.startswith("isothermal")
        self._truncated = scheme == "reversible_expansion"

    # -- coefficient helpers --------------------------------------------------
    def theta_fn(self, w):
        return self.model.Theta_M(w) if self._truncated else self.model.theta_of_w(w)

    def K_fn(self, w):
        return self.model.K_M(w) if self._truncated else self.model.conductivity_ratio(w)

    def _chi_coef(self, chi):
        return np.maximum(chi, 0.0) if self.scheme == "isothermal_irreversible" else chi

    def viscous_weight(self, chi):
        a = self.model.coeff("a", chi)
        if self.scheme == "isothermal_irreversible":
            a = np.maximum(a, 0.0)
        return a + self.model.delta

    def elastic_weight(self, chi):
        b = self.model.coeff("b", self._chi_coef(chi))
        if self.model.delta_on_elastic:
            b = b + self.model.delta
        return b

    def b_prime(self, chi):
        return self.model.coeff_prime("b", self._chi_coef(chi))

    def W_nodal(self, chi):
        """Smooth part of the phase potential (indicator parts vanish on feasible states)."""
        model = self.model
        val = model.gamma_hat(chi)
        if model.W == "log":
            val = val + model.beta_hat(chi)
        if self.scheme == "isothermal_irreversible":
            val = val + yosida_beta_hat(chi, self.tau)
        return val

    def W_prime(self, chi):
        model = self.model
        der = model.gamma(chi)
        if model.W == "log":
            der = der + model.beta_log(chi)
        if self.scheme == "isothermal_irreversible":
            der = der + yosida_beta(chi, self.tau)
        return der

    def elastic_density(self, u):
        return self.model.elastic_density(symmetric_gradient(u, self.mesh))

    def elastic_energy(self, u, chi):
        mesh = self.mesh
        wgt = mesh.element_average(self.elastic_weight(chi))
        return 0.5 * float(np.sum(mesh.measures * wgt * self.elastic_density(u)))

    # -- energies -----------------------------------------------------------------
    def energy_terms(self, state: State) -> dict:
        v = state.velocity(self.tau)
        terms = {
            "enthalpy_mass": 0.0 if self._isothermal else float(self.m @ state.w),
            "kinetic": 0.5 * float(self.mv @ (v.ravel() ** 2)),
            "elastic": self.elastic_energy(state.u, state.chi),
            "phi": ops.discrete_phi(state.chi, self.mesh, self.model),
            "W_int": float(self.m @ self.W_nodal(state.chi)),
        }
        terms["energy"] = sum(terms.values())
        return terms

    # -- sub-solves ----------------------------------------------------------------
    def chi_problem(self, state: State, theta_field):
        q = self.mesh.nodal_average(self.elastic_density(state.u))
        h = 0.5 * self.b_prime(state.chi) * q - theta_field
        mesh, model, tau = self.mesh, self.model, self.tau
        if self.scheme in ("irreversible",):
            return ChiStepProblem.irreversible(mesh, model, state.chi, tau, h)
        if self.scheme == "isothermal_irreversible":
            return ChiStepProblem.isothermal_irreversible(mesh, model, state.chi, tau, h)
        return ChiStepProblem.reversible(mesh, model, state.chi, tau, h)

    def solve_chi(self, prob, chi0=None):
        chi, rep = minimize_chi(prob, tol=self.tol.chi_tol, max_iter=self.tol.chi_max_iter, chi0=chi0)
        if not rep.converged:
            raise StepFailure(f"phase minimization did not converge (residual {rep.residual:.3e})")
        return chi, rep

    def solve_u(self, state: State, chi, k, theta_rho=None):
        """Momentum step in increment form; returns ``(u_new, stats)``."""
        mesh, tau = self.mesh, self.tau
        V = ops.assemble_viscous(self.viscous_weight(chi), mesh, self.model)
        E = ops.assemble_elastic(self.elastic_weight(chi), mesh, self.model)
        S = sp.diags(self.mv / tau ** 2) + V / tau + E
        u1 = state.u.ravel()
        du_prev = (state.u - state.u_prev).ravel()
        rhs = self.mv * self.f_means[k - 1].ravel() + self.mv * du_prev / tau ** 2 - E @ u1
        if theta_rho is not None:
            rhs = rhs - ops.thermal_coupling_vector(theta_rho, mesh, self.model)
        S2, rhs2 = ops.eliminate_dirichlet(S, rhs, self.dir_dofs)
        du, stats = cg_solve(S2, rhs2, tol=self.tol.cg_tol)
        if not stats.converged:
            raise StepFailure(f"momentum solve did not converge ({stats.final_residual:.3e})")
        return (u1 + du).reshape(state.u.shape), stats

    def solve_w(self, state: State, rate, w_lin, k, explicit):
        """Enthalpy step with the coupling ``rate * Theta(w)``.

        ``explicit``: ``Theta(w_lin)`` enters as a source.  Otherwise the
        positive part of the rate multiplies ``Theta(w_lin) / w_lin * w``
        (implicit, keeps the matrix an M-matrix) and the negative part
        enters as the nonnegative source ``-rate^- Theta(w_lin)``.

        Returns ``(w_new, coupling, stats)`` where ``coupling`` is the nodal
        coupling term actually used, for the energy ledger.
        """
        tau, m = self.tau, self.m
        th = self.theta_fn(w_lin)
        if explicit:
            c_imp = np.zeros_like(rate)
            src = -rate * th
        else:
            pos = (rate > 0) & (w_lin > 0)
            c_imp = np.where(pos, rate * th / np.where(pos, w_lin, 1.0), 0.0)
            src = np.where(rate < 0, -rate * th, 0.0)
        A = ops.assemble_w_diffusion(self.K_fn(state.w), self.mesh)
        S = A + sp.diags(m / tau + m * c_imp)
        w1 = state.w
        rhs = m * self.g_means[k - 1] + m * src - A @ w1 - m * c_imp * w1
        dw, stats = cg_solve(S.tocsr(), rhs, tol=self.tol.cg_tol)
        if not stats.converged:
            raise StepFailure(f"enthalpy solve did not converge ({stats.final_residual:.3e})")
        w = w1 + dw
        return w, c_imp * w - src, stats

    # -- schemes -----------------------------------------------------------------
    def step(self, state: State):
        k = state.k + 1
        if self.scheme in ("reversible", "reversible_expansion"):
            out = self._step_reversible(state, k)
        elif self.scheme == "irreversible":
            out = self._step_irreversible(state, k)
        elif self.scheme == "isothermal_irreversible":
            out = self._step_isothermal(state, k, self.theta_means[k - 2] if k >= 2 else self.theta_start)
        else:
            out = self._step_isothermal(state, k, self.theta_means[k - 1])
        return out

    def _step_irreversible(self, state, k):
        theta_prev = self.theta_fn(state.w)
        prob = self.chi_problem(state, theta_prev)
        chi, rep = self.solve_chi(prob)
        u, ust = self.solve_u(state, chi, k)
        rate = (chi - state.chi) / self.tau
        w, coupling, wst = self.solve_w(state, rate, state.w, k, explicit=True)
        new = State(k, k * self.tau, w, u, state.u.copy(), chi)
        return new, self._report(state, new, prob, rep, theta_prev, coupling, k,
                                 cg=(ust, wst), fp=(0, 0.0))

    def _step_isothermal(self, state, k, theta):
        prob = self.chi_problem(state, np.broadcast_to(theta, state.chi.shape))
        chi, rep = self.solve_chi(prob)
        u, ust = self.solve_u(state, chi, k)
        new = State(k, k * self.tau, state.w.copy(), u, state.u.copy(), chi)
        return new, self._report(state, new, prob, rep, np.broadcast_to(theta, chi.shape),
                                 np.zeros_like(chi), k, cg=(ust,), fp=(0, 0.0))

    def _step_reversible(self, state, k):
        tau, omega = self.tau, self.tol.damping
        rho = self.model.rho if self._truncated else 0.0
        chi_n, u_n, w_n = state.chi.copy(), state.u.copy(), state.w.copy()
        change = np.inf
        for it in range(1, self.tol.fp_max_iter + 1):
            theta_n = self.theta_fn(w_n)
            prob = self.chi_problem(state, theta_n)
            chi, rep = self.solve_chi(prob, chi0=chi_n)
            u, ust = self.solve_u(state, chi, k, theta_rho=theta_n if rho else None)
            rate = (chi - state.chi) / tau
            if rho:
                rate = rate + rho * self.mesh.nodal_average(divergence(u - state.u, self.mesh)) / tau
            w, coupling, wst = self.solve_w(state, rate, w_n, k, explicit=False)
            change = max(np.max(np.abs(chi - chi_n)), np.max(np.abs(u - u_n)), np.max(np.abs(w - w_n)))
            if change <= self.tol.fp_tol:
                break
            chi_n = chi_n + omega * (chi - chi_n)
            u_n = u_n + omega * (u - u_n)
            w_n = w_n + omega * (w - w_n)
        else:
            raise StepFailure(f"Gauss-Seidel did not converge in {self.tol.fp_max_iter} sweeps "
                              f"(last change {change:.3e}); try a smaller tau")
        new = State(k, k * tau, w, u, state.u.copy(), chi)
        return new, self._report(state, new, prob, rep, theta_n, coupling, k,
                                 cg=(ust, wst), fp=(it, change), theta_rho=theta_n if rho else None)

    # -- ledger -----------------------------------------------------------------
    def _report(self, old, new, prob, rep, theta_chi, coupling, k, cg, fp, theta_rho=None):
        mesh, m, tau, model = self.mesh, self.m, self.tau, self.model
        e_old = self.energy_terms(old)
        e_new = self.energy_terms(new)
        dchi = new.chi - old.chi
        du = (new.u - old.u).ravel()
        v_new = new.velocity(tau).ravel()
        v_old = old.velocity(tau).ravel()

        diss_chi = float(m @ (dchi * dchi)) / tau
        Vw = mesh.element_average(self.viscous_weight(new.chi))
        eps_du = symmetric_gradient(new.u - old.u, mesh)
        diss_visc = float(np.sum(mesh.measures * Vw * model.viscous_density(eps_du))) / tau
        work_f = float(self.mv @ (self.f_means[k - 1].ravel() * du))
        heat_g = 0.0 if self._isothermal else tau * float(m @ self.g_means[k - 1])
        slack = e_old["energy"] + work_f + heat_g - e_new["energy"] - diss_chi - diss_visc

        dv = v_new - v_old
        def_kin = 0.5 * float(self.mv @ (dv * dv))
        def_el = self.elastic_energy(new.u - old.u, new.chi)
        r_new = ops.p_laplacian_residual(new.chi, mesh, model)
        phi_new, phi_old = e_new["phi"], e_old["phi"]
        def_phi = float(r_new @ dchi) - (phi_new - phi_old)
        def_W = float(m @ (self.W_prime(new.chi) * dchi)) - (e_new["W_int"] - e_old["W_int"])
        G = rep.gradient
        def_xi = -float(m @ (G * dchi))
        q_old = self.elastic_density(old.u)
        db_el = mesh.element_average(self.elastic_weight(new.chi) - self.elastic_weight(old.chi))
        def_b = (0.5 * float(np.sum(mesh.measures * db_el * q_old))
                 - 0.5 * float(m @ (self.b_prime(old.chi) * mesh.nodal_average(q_old) * dchi)))
        cpl = 0.0
        if not self._isothermal:
            cpl = tau * float(m @ coupling) - float(m @ (theta_chi * dchi))
            if theta_rho is not None:
                cpl += float(ops.thermal_coupling_vector(theta_rho, mesh, model) @ du)
        else:
            # prescribed temperature: its work is an input, not an exchange
            cpl = -float(m @ (theta_chi * dchi))
        defects = def_kin + def_el + def_phi + def_W + def_xi - def_b + cpl

        # phase-only inequality
        drive = -0.5 * self.b_prime(old.chi) * mesh.nodal_average(q_old) + theta_chi
        slack_chi = (phi_old + e_old["W_int"] + float(m @ (dchi * drive)) - diss_chi
                     - phi_new - e_new["W_int"])
        remainder = max(0.0, -def_W)

        scale = max(1.0, abs(e_old["energy"]), abs(e_new["energy"]))
        vi = one_sided_vi_residual(new.chi, prob, rep.xi)
        return StepReport(
            k=k, t=k * tau,
            chi_iterations=rep.iterations, chi_residual=rep.residual, chi_converged=rep.converged,
            vi_residual=vi, fp_iterations=fp[0], fp_change=float(fp[1]),
            cg_iterations=sum(s.iterations for s in cg), cg_residual=max(s.final_residual for s in cg),
            min_w=float(new.w.min()), max_abs_w=float(np.abs(new.w).max()),
            chi_nonincreasing=bool(np.all(new.chi <= old.chi)),
            chi_min=float(new.chi.min()), chi_max=float(new.chi.max()),
            energy=e_new["energy"], enthalpy_mass=e_new["enthalpy_mass"], kinetic=e_new["kinetic"],
            elastic=e_new["elastic"], phi=phi_new, W_int=e_new["W_int"],
            diss_chi=diss_chi, diss_visc=diss_visc, work_f=work_f, heat_g=heat_g,
            slack=slack, def_kin=def_kin, def_el=def_el, def_phi=def_phi, def_W=def_W,
            def_xi=def_xi, def_b=def_b, def_coupling=cpl, defect_sum=defects,
            slack_chi=slack_chi, remainder=remainder, energy_scale=scale,
        )


# -- initial data ------------------------------------------------------------------

def smooth_initial_enthalpy(w0, mesh: Mesh, tau: float):
    """One lumped-mass H1 smoothing step ``(M + tau^(2/r) A) w = M w0``, ``r = (d+2)/(d+1)``."""
    r_bar = (mesh.dim + 2.0) / (mesh.dim + 1.0)
    A = ops.assemble_w_diffusion(np.ones(mesh.n_nodes), mesh)
    S = (A * tau ** (2.0 / r_bar) + sp.diags(mesh.lumped)).tocsr()
    w, stats = cg_solve(S, mesh.lumped * w0, tol=1e-14)
    if not stats.converged:
        raise ConvergenceError("initial enthalpy smoothing did not converge")
    return w


def prepare_initial(mesh: Mesh, model, tau: float, theta0, u0, v0, chi0,
                    smooth_enthalpy: bool = False, w_floor=None) -> State:
    """Build the state at step 0 (``u_prev = u0 - tau v0``).

    Parameters
    ----------
    theta0, chi0 : nodal arrays
    u0, v0 : (n_nodes, dim) arrays; boundary values are set to zero
    smooth_enthalpy : bool
        Replace ``w0 = h(theta0)`` by its smoothed version (irreversible
        scheme) followed by the node-wise max with ``w_floor``.
    w_floor : float, optional
        Defaults to ``h(min theta0)``.
    """
    theta0 = np.asarray(theta0, dtype=float)
    chi0 = np.asarray(chi0, dtype=float)
    if np.any(theta0 < 0):
        raise ValueError("initial temperature must be nonnegative")
    lo, hi = model.feasible_interval()
    if model.W == "log":
        if np.any(chi0 <= 0) or np.any(chi0 >= 1):
            raise ValueError("initial phase must lie in (0, 1) for the logarithmic potential")
    elif np.any(chi0 < lo) or np.any(chi0 > hi):
        raise ValueError(f"initial phase must lie in [{lo}, {hi}]")
    u0 = np.array(u0, dtype=float).reshape(mesh.n_nodes, mesh.dim)
    v0 = np.array(v0, dtype=float).reshape(mesh.n_nodes, mesh.dim)
    u0[mesh.boundary] = 0.0
    v0[mesh.boundary] = 0.0
    w0 = model.enthalpy(theta0)
    if smooth_enthalpy:
        floor = model.enthalpy(float(theta0.min())) if w_floor is None else w_floor
        w0 = np.maximum(smooth_initial_enthalpy(w0, mesh, tau), floor)
    return State(0, 0.0, np.asarray(w0, dtype=float), u0, u0 - tau * v0, chi0.copy())


# -- driver -------------------------------------------------------------------------

@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    tau: float = 0.0
    mesh: Mesh | None = None
    model: object = None
    stepper: Stepper | None = None

    def stack(self, name):
        return np.array([getattr(s, name) for s in self.states])


def build_from_config(cfg: RunConfig, extra=None):
    """Return ``(mesh, model, schedule, stepper, initial_state)`` for a config.

    ``extra`` optionally maps data names (``f``, ``g``, ``theta_star``,
    ``theta0``, ``u0``, ``v0``, ``chi0``) to a further ``DataSpec`` that is
    added to the configured one.
    """
    mesh = build_mesh(cfg.mesh.dim, cfg.mesh.extent, cfg.mesh.n)
    model = cfg.material
    d, ic = cfg.data, cfg.ic
    dim = mesh.dim
    extra = extra or {}
    specs = {"f": d.f, "g": d.g, "theta_star": d.theta_star,
             "theta0": ic.theta0, "u0": ic.u0, "v0": ic.v0, "chi0": ic.chi0}
    unknown = set(extra) - set(specs)
    if unknown:
        raise ValueError(f"unknown data names in extra: {sorted(unknown)}")

    def field_at(name, t, ncomp=None):
        val = specs[name].evaluate(t, mesh, ncomp)
        if name in extra:
            val = val + extra[name].evaluate(t, mesh, ncomp)
        return val

    bps = []
    for name in ("f", "g", "theta_star"):
        bps += specs[name].breakpoints() + (extra[name].breakpoints() if name in extra else [])
    schedule = Schedule(
        cfg.schedule.T, cfg.schedule.tau,
        f=lambda t: field_at("f", t, dim),
        g=lambda t: field_at("g", t),
        theta_star=lambda t: field_at("theta_star", t),
        breakpoints=tuple(bps),
    )
    stepper = Stepper(mesh, model, schedule, cfg.scheme, cfg.tolerances)
    state = prepare_initial(
        mesh, model, cfg.schedule.tau,
        theta0=field_at("theta0", 0.0), u0=field_at("u0", 0.0, dim),
        v0=field_at("v0", 0.0, dim), chi0=field_at("chi0", 0.0),
        smooth_enthalpy=cfg.scheme == "irreversible",
    )
    return mesh, model, schedule, stepper, state


def run(cfg: RunConfig, callback=None, extra=None) -> Trajectory:
    """Execute all steps of the configured scheme; deterministic."""
    cfg.validate()
    mesh, model, schedule, stepper, state = build_from_config(cfg, extra)
    traj = Trajectory(states=[state], tau=schedule.tau, mesh=mesh, model=model, stepper=stepper)
    for _ in range(schedule.K):
        state, rep = stepper.step(state)
        traj.states.append(state)
        traj.reports.append(rep)
        if callback is not None:
            callback(state, rep)
    return traj
