"""Verification quantities: ledgers, quasi-stresses, refinement and sweep studies.

Discrete norms: ``L^inf`` in time is the max over time levels, ``L^r`` in
time a tau-weighted sum, spatial ``L^2`` uses the lumped mass, ``W^{1,p}``
seminorms use element gradients.
"""
from __future__ import annotations

import json

import numpy as np

from . import operators as ops
from .config import DataSpec, RunConfig
from .grid import Mesh, displacement_gradient, gradient, symmetric_gradient
from .stepper import Trajectory, run


# -- energy ledgers ---------------------------------------------------------------

def energy_ledger_check(reports, mu: int, tol: float = 1e-8):
    """Per-step slack of the total energy balance.

    ``slack`` is (previous energy + inputs) - (new energy + dissipation).
    With ``mu = 0`` the slack must equal the logged defects; with ``mu = 1``
    it must not fall below minus the nonconvexity remainder.

    Returns
    -------
    dict with arrays ``slack``, ``defects``, ``violation`` and a bool ``ok``.
    """
    slack = np.array([r.slack for r in reports])
    defects = np.array([r.defect_sum for r in reports])
    scale = np.array([r.energy_scale for r in reports])
    rem = np.array([r.remainder for r in reports])
    if mu == 0:
        viol = np.abs(slack - defects) / scale
    else:
        viol = np.maximum(0.0, -(slack + rem)) / scale
    return {"slack": slack, "defects": defects, "violation": viol,
            "ok": bool(np.all(viol <= tol)), "worst": float(viol.max(initial=0.0))}


def chi_energy_inequality(reports, tol: float = 1e-9, scale=None):
    """Phase-only energy inequality per step, with the remainder reported apart.

    ``scale`` defaults to the per-step energy scale of the reports.
    """
    slack = np.array([r.slack_chi for r in reports])
    rem = np.array([r.remainder for r in reports])
    if scale is None:
        scale = np.array([r.energy_scale for r in reports])
    viol = np.maximum(0.0, -(slack + rem)) / scale
    return {"slack": slack, "remainder": rem, "total_remainder": float(rem.sum()),
            "violation": viol, "ok": bool(np.all(viol <= tol))}


def vi_and_energy_residuals(traj: Trajectory):
    return {
        "vi_residual": np.array([r.vi_residual for r in traj.reports]),
        "energy_slack": np.array([r.slack for r in traj.reports]),
        "chi_slack": np.array([r.slack_chi for r in traj.reports]),
    }


# -- quasi-stresses and the degenerate momentum balance ------------------------------

def quasi_stresses(state, prev_u, mesh: Mesh, tau: float, delta: float):
    """``(sqrt(chi + delta) eps(v), sqrt(chi + delta) eps(u))`` per element.

    ``chi`` is averaged per element and ``v = (u - prev_u) / tau``.
    """
    wgt = np.sqrt(np.maximum(mesh.element_average(state.chi), 0.0) + delta)[:, None, None]
    mu_q = wgt * symmetric_gradient((state.u - prev_u) / tau, mesh)
    eta_q = wgt * symmetric_gradient(state.u, mesh)
    return mu_q, eta_q


def _tensor_l2(T, mesh):
    return float(np.sqrt(np.sum(mesh.measures * np.sum(T * T, axis=(1, 2)))))


def quasi_stress_norms(traj: Trajectory, delta: float):
    """``||mu||_{L2 L2}`` and ``||eta||_{L_inf L2}`` over a trajectory."""
    mesh, tau = traj.mesh, traj.tau
    mu_sq, eta_max = 0.0, 0.0
    for s in traj.states[1:]:
        mu_q, eta_q = quasi_stresses(s, s.u_prev, mesh, tau, delta)
        mu_sq += tau * _tensor_l2(mu_q, mesh) ** 2
        eta_max = max(eta_max, _tensor_l2(eta_q, mesh))
    return float(np.sqrt(mu_sq)), eta_max


def _stress_force(mesh, weight_e, tensor, l1, l2):
    """Nodal force vector ``sum_e |e| weight_e (R tensor) : eps(phi)``."""
    tr = np.trace(tensor, axis1=1, axis2=2)
    R = l1 * tr[:, None, None] * np.eye(mesh.dim) + 2.0 * l2 * tensor
    R = R * (weight_e * mesh.measures)[:, None, None]
    out = np.zeros((mesh.n_nodes, mesh.dim))
    # (R : eps(phi_a e_c)) = sum_j R[c, j] B_a[j] for symmetric R
    np.add.at(out, mesh.elements, np.einsum("ecj,eaj->eac", R, mesh.grads))
    return out.ravel()


def momentum_residual(traj: Trajectory, delta: float, chi_thresh: float = 0.1, literal: bool = False):
    """Relative residual of the momentum balance written with quasi-stresses.

    The residual is tested with nodal hat functions at interior nodes where
    ``chi > chi_thresh``.  With ``literal=False`` the outer weights are
    ``sqrt(chi + delta)`` (the discrete equation at this delta); with
    ``literal=True`` they are ``sqrt(chi)`` as in the degenerate limit,
    which differs by a term of order ``delta``.  Each step's residual is
    divided by the norm of the right-hand side of its linear system.
    """
    mesh, tau, model = traj.mesh, traj.tau, traj.model
    stepper = traj.stepper
    mv = np.repeat(mesh.lumped, mesh.dim)
    out = []
    states = traj.states
    for k in range(1, len(states)):
        s = states[k]
        u2 = states[k - 1].u_prev
        u1, u = s.u_prev, s.u
        acc = mv * (u - 2 * u1 + u2).ravel() / tau ** 2
        mu_q, eta_q = quasi_stresses(s, u1, mesh, tau, delta)
        chi_e = np.maximum(mesh.element_average(s.chi), 0.0)
        outer = np.sqrt(chi_e) if literal else np.sqrt(chi_e + delta)
        force = (_stress_force(mesh, outer, mu_q, model.ell1, model.ell2)
                 + _stress_force(mesh, outer, eta_q, model.lambda1, model.lambda2))
        f = stepper.f_means[k - 1].ravel()
        res = acc + force - mv * f
        E = ops.assemble_elastic(stepper.elastic_weight(s.chi), mesh, model)
        rhs = mv * f + mv * (u1 - u2).ravel() / tau ** 2 - E @ u1.ravel()
        mask = np.zeros((mesh.n_nodes, mesh.dim), dtype=bool)
        region = mesh.interior_mask() & (s.chi > chi_thresh)
        mask[region] = True
        mask = mask.ravel()
        rhs[ops.dirichlet_dofs(mesh)] = 0.0
        denom = max(np.linalg.norm(rhs), 1e-300)
        out.append(float(np.linalg.norm(res[mask]) / denom) if mask.any() else 0.0)
    return np.array(out)


# -- Boccardo-Gallouet functional ------------------------------------------------------

def boccardo_gallouet(w, mesh: Mesh, varsigma: float) -> float:
    """``int |grad w|^2 / (1 + w)^(varsigma + 1)`` with ``w`` averaged per element."""
    w = np.asarray(w, dtype=float)
    if varsigma <= 0:
        raise ValueError("varsigma must be positive")
    if np.any(w < 0):
        raise ValueError("the functional needs a nonnegative enthalpy")
    g = gradient(w, mesh)
    wbar = mesh.element_average(w)
    return float(np.sum(mesh.measures * np.sum(g * g, axis=1) / (1.0 + wbar) ** (varsigma + 1.0)))


def accumulated_boccardo_gallouet(traj: Trajectory, varsigma: float) -> float:
    return float(sum(traj.tau * boccardo_gallouet(s.w, traj.mesh, varsigma) for s in traj.states[1:]))


# -- discrete norms -------------------------------------------------------------------

def l2(field, mesh: Mesh) -> float:
    field = np.asarray(field, dtype=float)
    if field.ndim == 1:
        return float(np.sqrt(mesh.lumped @ field ** 2))
    return float(np.sqrt(mesh.lumped @ np.sum(field ** 2, axis=1)))


def h1_vector(field, mesh: Mesh) -> float:
    full = displacement_gradient(field, mesh)
    return float(np.sqrt(l2(field, mesh) ** 2 + np.sum(mesh.measures * np.sum(full ** 2, axis=(1, 2)))))


def korn_check(mesh: Mesh, model, n_samples: int = 200, eta_min: float = 0.1, seed: int = 0):
    """Empirical Korn constant and the weighted lower bound on the same sample.

    ``C1_emp`` is the minimum over random displacements vanishing on the
    boundary of ``e(1; u, u) / ||grad u||^2``.  The weighted check uses a
    random nodal weight ``eta >= eta_min`` and requires
    ``e(eta; u, u) >= eta_min * C1_emp * ||grad u||^2`` for every sample.
    """
    rng = np.random.default_rng(seed)
    E1 = ops.assemble_elastic(np.ones(mesh.n_nodes), mesh, model)
    eta = eta_min + rng.uniform(0.0, 1.0, mesh.n_nodes)
    Ew = ops.assemble_elastic(eta, mesh, model)
    interior = np.repeat(mesh.interior_mask(), mesh.dim)
    samples = []
    for i in range(n_samples):
        if i % 2:
            # smooth modes probe the low end of the spectrum
            mode = np.prod(np.sin(np.pi * (i % 7 + 1) * mesh.nodes / np.asarray(mesh.extent)), axis=1)
            u = np.outer(mode, rng.standard_normal(mesh.dim)).ravel()
        else:
            u = rng.standard_normal(mesh.n_nodes * mesh.dim)
        u[~interior] = 0.0
        G = displacement_gradient(u.reshape(-1, mesh.dim), mesh)
        nrm = float(np.sum(mesh.measures * np.sum(G * G, axis=(1, 2))))
        samples.append((float(u @ (E1 @ u)) / nrm, float(u @ (Ew @ u)) / nrm))
    ratios = np.array(samples)
    c1 = float(ratios[:, 0].min())
    margin = ratios[:, 1] - eta_min * c1
    return {"C1_emp": c1, "worst_margin": float(margin.min()),
            "ok": bool(c1 > 0 and np.all(margin >= -1e-12 * ratios[:, 1]))}


def w1p(field, mesh: Mesh, p: float) -> float:
    g = gradient(field, mesh)
    val = mesh.lumped @ np.abs(field) ** p + np.sum(mesh.measures * np.sum(g * g, axis=1) ** (p / 2))
    return float(val ** (1.0 / p))


# -- experiments ---------------------------------------------------------------------

def fitted_rate(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def tau_refinement(cfg: RunConfig, levels: int = 4, min_rate: float = 0.4):
    """Cauchy differences between trajectories at ``tau, tau/2, ...``.

    The differences are measured at the coarse time levels in ``L^inf L^2``
    for ``w``, ``u`` and ``chi``, summed into one number per pair.
    """
    trajs = []
    tau0 = cfg.schedule.tau
    for j in range(levels):
        c = cfg.copy()
        c.schedule.tau = tau0 / 2 ** j
        trajs.append(run(c))
    rows = []
    mesh = trajs[0].mesh
    for j in range(levels - 1):
        a, b = trajs[j], trajs[j + 1]
        per = {"w": 0.0, "u": 0.0, "chi": 0.0}
        for k, s in enumerate(a.states):
            t = b.states[2 * k]
            per["w"] = max(per["w"], l2(s.w - t.w, mesh))
            per["u"] = max(per["u"], l2(s.u - t.u, mesh))
            per["chi"] = max(per["chi"], l2(s.chi - t.chi, mesh))
        rows.append({"tau": a.tau, **per, "total": sum(per.values())})
    diffs = np.array([r["total"] for r in rows])
    taus = np.array([r["tau"] for r in rows])
    rate = fitted_rate(taus, diffs)
    monotone = bool(np.all(np.diff(diffs) < 0))
    return {"experiment": "tau_refinement", "config_hash": cfg.hash(), "table": rows,
            "rate": rate, "monotone": monotone, "pass": bool(monotone and rate >= min_rate),
            "trajectories": trajs}


def delta_sweep(cfg: RunConfig, deltas, chi_thresh: float = 0.1, factor: float = 10.0,
                residual_tol: float | None = None):
    """Identical runs for decreasing ``delta`` (both coefficients shifted)."""
    rows, trajs = [], []
    tol = 10.0 * cfg.tolerances.cg_tol if residual_tol is None else residual_tol
    for d in deltas:
        c = cfg.copy()
        c.material.delta = float(d)
        c.material.delta_on_elastic = True
        tr = run(c)
        trajs.append(tr)
        mu_n, eta_n = quasi_stress_norms(tr, d)
        res = momentum_residual(tr, d, chi_thresh)
        res_lit = momentum_residual(tr, d, chi_thresh, literal=True)
        chi_ok = all(r.chi_nonincreasing for r in tr.reports)
        rows.append({"delta": float(d), "mu_norm": mu_n, "eta_norm": eta_n,
                     "momentum_residual": float(res.max()), "literal_residual": float(res_lit.max()),
                     "min_chi": float(min(s.chi.min() for s in tr.states)), "chi_nonincreasing": chi_ok})
    mesh = trajs[0].mesh
    diffs = []
    for a, b in zip(trajs[:-1], trajs[1:]):
        diffs.append({
            "deltas": [a.model.delta, b.model.delta],
            "w": max(l2(s.w - t.w, mesh) for s, t in zip(a.states, b.states)),
            "u": max(l2(s.u - t.u, mesh) for s, t in zip(a.states, b.states)),
            "chi": max(l2(s.chi - t.chi, mesh) for s, t in zip(a.states, b.states)),
        })
    mus = np.array([r["mu_norm"] for r in rows])
    etas = np.array([r["eta_norm"] for r in rows])
    ratio_mu = float(mus.max() / mus.min())
    ratio_eta = float(etas.max() / etas.min())
    res_ok = all(r["momentum_residual"] <= tol for r in rows)
    ok = ratio_mu <= factor and ratio_eta <= factor and res_ok and all(r["chi_nonincreasing"] for r in rows)
    return {"experiment": "delta_sweep", "config_hash": cfg.hash(), "table": rows, "differences": diffs,
            "ratio_mu": ratio_mu, "ratio_eta": ratio_eta, "residual_tol": tol, "pass": bool(ok)}


def perturbation_directions(dim: int, eps: float):
    """Fixed data perturbations of size ``eps`` for twin runs."""
    return {
        "u0": DataSpec(kind="sine_bump", amplitude=[0.5 * eps] * dim),
        "v0": DataSpec(kind="sine_bump", amplitude=[eps] * dim),
        "chi0": DataSpec(kind="cosine", amplitude=0.5 * eps, wavenumber=2.0),
        "f": DataSpec(kind="gaussian", amplitude=[eps] * dim, width=0.2),
        "theta_star": DataSpec(kind="constant", amplitude=eps),
    }


def _twin_distance(a: Trajectory, b: Trajectory, p: float):
    mesh, tau = a.mesh, a.tau
    u_inf = max(l2(s.u - t.u, mesh) for s, t in zip(a.states, b.states))
    v_inf = max(l2(s.velocity(tau) - t.velocity(tau), mesh) for s, t in zip(a.states, b.states))
    v_h1 = np.sqrt(sum(tau * h1_vector(s.velocity(tau) - t.velocity(tau), mesh) ** 2
                       for s, t in zip(a.states[1:], b.states[1:])))
    chi_inf = max(l2(s.chi - t.chi, mesh) for s, t in zip(a.states, b.states))
    chi_w = sum(tau * w1p(s.chi - t.chi, mesh, p) ** p for s, t in zip(a.states[1:], b.states[1:])) ** (1 / p)
    parts = {"u_Linf_L2": u_inf, "v_Linf_L2": v_inf, "v_L2_H1": float(v_h1),
             "chi_Linf_L2": chi_inf, "chi_Lp_W1p": float(chi_w)}
    return sum(parts.values()), parts


def _data_distance(a: Trajectory, b: Trajectory, p: float):
    mesh, tau = a.mesh, a.tau
    s0, t0 = a.states[0], b.states[0]
    sa, sb = a.stepper, b.stepper
    d = (h1_vector(s0.u - t0.u, mesh) + l2(s0.velocity(tau) - t0.velocity(tau), mesh)
         + w1p(s0.chi - t0.chi, mesh, p)
         + np.sqrt(sum(tau * l2(fa - fb, mesh) ** 2 for fa, fb in zip(sa.f_means, sb.f_means)))
         + np.sqrt(sum(tau * l2(ta - tb, mesh) ** 2 for ta, tb in zip(sa.theta_means, sb.theta_means))))
    return float(d)


def continuous_dependence_experiment(cfg: RunConfig, epsilons, slope_range=(0.9, 1.1)):
    """Twin runs with data perturbed by ``eps`` along fixed directions."""
    base = run(cfg)
    p = cfg.material.p
    rows = []
    for eps in epsilons:
        twin = run(cfg, extra=perturbation_directions(cfg.mesh.dim, float(eps)))
        lhs, parts = _twin_distance(base, twin, p)
        lhs_sw, _ = _twin_distance(twin, base, p)
        rhs = _data_distance(base, twin, p)
        rows.append({"eps": float(eps), "lhs": lhs, "lhs_swapped": lhs_sw, "rhs": rhs,
                     "ratio": lhs / rhs if rhs > 0 else 0.0, **parts})
    pos = [r for r in rows if r["eps"] > 0]
    slope = fitted_rate([r["eps"] for r in pos], [r["lhs"] for r in pos])
    ok = slope_range[0] <= slope <= slope_range[1]
    return {"experiment": "continuous_dependence", "config_hash": cfg.hash(), "table": rows,
            "slope": slope, "pass": bool(ok)}


def boccardo_gallouet_uniformity(cfg: RunConfig, levels: int = 3, varsigma: float = 0.5, factor: float = 2.0):
    vals = []
    tau0 = cfg.schedule.tau
    for j in range(levels):
        c = cfg.copy()
        c.schedule.tau = tau0 / 2 ** j
        vals.append({"tau": c.schedule.tau, "value": accumulated_boccardo_gallouet(run(c), varsigma)})
    arr = np.array([v["value"] for v in vals])
    ratio = float(arr.max() / arr.min()) if arr.min() > 0 else np.inf
    return {"experiment": "boccardo_gallouet", "config_hash": cfg.hash(), "table": vals,
            "ratio": ratio, "pass": bool(ratio <= factor)}


# -- report output -------------------------------------------------------------------

def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def write_report(path, report: dict):
    clean = {k: v for k, v in report.items() if k != "trajectories"}
    with open(path, "w") as fh:
        json.dump(clean, fh, indent=2, default=_json_default)
