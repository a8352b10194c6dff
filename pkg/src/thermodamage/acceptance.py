"""The fourteen acceptance criteria as plain functions.

Each ``criterion_NN`` returns a :class:`CriterionResult`; ``run_all``
evaluates a selection.  Tolerances are fixed here and are not tunable.
"""
from __future__ import annotations

import inspect
import time
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from . import presets
from .chi_solver import (ChiStepProblem, brute_force_minimize, chi_energy, chi_energy_gradient,
                         minimize_chi)
from .config import DataSpec, RunConfig
from .grid import build_mesh
from .material import MaterialModel
from .operators import discrete_phi, p_laplacian_residual
from .stepper import run


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"criterion {self.number:02d} {self.name}: {status} ({info}) [{self.seconds:.1f}s]"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# -- randomized scenarios ---------------------------------------------------------------

def random_run_config(rng, scheme: str, dim: int | None = None) -> RunConfig:
    """Random forced run with ``g >= 0`` and ``theta0 >= 0.2``."""
    dim = int(rng.integers(1, 3)) if dim is None else dim
    n = int(rng.choice([16, 32, 64])) if dim == 1 else int(rng.choice([8, 12, 16]))
    K = int(rng.integers(5, 16))
    tau = float(rng.choice([5e-4, 1e-3, 2e-3]))
    cfg = presets.reference(scheme, dim, n, T=K * tau, tau=tau)
    m = cfg.material
    m.gamma_coeffs = [float(rng.uniform(-1, 3)), float(rng.uniform(-2, 0))]
    m.p = float(rng.choice([3.0, 4.0]))
    m.delta = float(rng.choice([1e-3, 1e-2, 1e-1]))
    m.lambda1, m.lambda2 = float(rng.uniform(0.5, 2)), float(rng.uniform(0.5, 2))
    cfg.ic.chi0 = DataSpec(kind="cosine", base=float(rng.uniform(0.5, 0.8)),
                           amplitude=float(rng.uniform(0, 0.2)), wavenumber=float(rng.integers(1, 4)))
    cfg.ic.theta0 = DataSpec(kind="gaussian", base=0.2, amplitude=float(rng.uniform(0, 2)),
                             center=list(rng.uniform(0.2, 0.8, 2)), width=float(rng.uniform(0.05, 0.3)))
    cfg.ic.u0 = DataSpec(kind="sine_bump", amplitude=list(rng.uniform(-1, 1, dim)))
    cfg.ic.v0 = DataSpec(kind="sine_bump", amplitude=list(rng.uniform(-1, 1, dim)))
    cfg.data.f = DataSpec(kind="gaussian", amplitude=list(rng.uniform(-20, 20, dim)),
                          center=list(rng.uniform(0.2, 0.8, 2)), width=0.15)
    cfg.data.g = DataSpec(kind="gaussian", base=float(rng.uniform(0, 1)), amplitude=float(rng.uniform(0, 5)),
                          center=list(rng.uniform(0.2, 0.8, 2)), width=0.2)
    cfg.data.theta_star = DataSpec(kind="constant", base=float(rng.uniform(0, 1)))
    return cfg


def _runs(seed, count, schemes):
    rng = np.random.default_rng(seed)
    return [run(random_run_config(rng, schemes[i % len(schemes)])) for i in range(count)]


# -- criteria -----------------------------------------------------------------------------

def criterion_01(seed: int = 1) -> CriterionResult:
    """Irreversible runs never increase chi at any node."""
    trajs = _runs(seed, 20, ["irreversible", "isothermal_irreversible"])
    worst = max(float(np.max(b.chi - a.chi)) for tr in trajs for a, b in zip(tr.states, tr.states[1:]))
    ok = all(r.chi_nonincreasing for tr in trajs for r in tr.reports) and worst <= 0.0
    return CriterionResult(1, "irreversibility", ok, {"runs": 20, "max_increase": worst})


def criterion_02(seed: int = 2) -> CriterionResult:
    """Reversible runs with nonnegative heat source and initial enthalpy stay nonnegative."""
    rng = np.random.default_rng(seed)
    mins = []
    for i in range(6):
        scheme = ("reversible", "reversible_expansion")[i % 2]
        cfg = random_run_config(rng, scheme, dim=1 + (i // 2) % 2)
        if i % 3 == 0:
            # start from zero temperature on part of the domain
            cfg.ic.theta0 = DataSpec(kind="gaussian", base=0.0, amplitude=1.0, width=0.1)
            cfg.data.g = DataSpec(kind="constant", base=0.0)
        tr = run(cfg)
        mins.append(min(float(s.w.min()) for s in tr.states))
    worst = min(mins)
    return CriterionResult(2, "positivity_reversible", worst >= -1e-12, {"runs": 6, "min_w": worst})


def criterion_03(seed: int = 3) -> CriterionResult:
    """Irreversible runs with theta0 >= 0.2 keep w above h(0.2)."""
    trajs = _runs(seed, 10, ["irreversible"])
    bound = MaterialModel().enthalpy(0.2)
    worst = min(float(s.w.min()) - tr.model.enthalpy(0.2) for tr in trajs for s in tr.states[1:])
    return CriterionResult(3, "positivity_strict", worst >= -1e-12,
                           {"runs": 10, "h(0.2)": float(bound), "min_w_minus_bound": worst})


def criterion_04(seed: int = 4) -> CriterionResult:
    """Phase-only energy inequality per step; remainder vanishes under tau refinement."""
    trajs = _runs(seed, 6, ["irreversible"])
    worst = 0.0
    for tr in trajs:
        scale0 = max(1.0, abs(tr.stepper.energy_terms(tr.states[0])["energy"]))
        res = dg.chi_energy_inequality(tr.reports, tol=1e-9, scale=scale0)
        worst = max(worst, float(res["violation"].max()))
    cfg = presets.reference("irreversible", T=0.02, tau=2e-3)
    taus, rems = [], []
    for j in range(4):
        c = cfg.copy()
        c.schedule.tau = cfg.schedule.tau / 2 ** j
        tr = run(c)
        taus.append(tr.tau)
        rems.append(sum(r.remainder for r in tr.reports))
    rate = dg.fitted_rate(taus, rems) if min(rems) > 0 else float("inf")
    ok = worst <= 1e-9 and rate >= 0.4
    return CriterionResult(4, "discrete_energy_inequality", ok,
                           {"worst_violation": worst, "remainder_rate": rate, "remainder_coarse": rems[0]})


def criterion_05(seed: int = 5) -> CriterionResult:
    """Total energy ledger of the reversible schemes reconciles with the logged defects."""
    schemes = ["reversible", "reversible_expansion", "isothermal_reversible"]
    trajs = _runs(seed, 6, schemes)
    worst = max(dg.energy_ledger_check(tr.reports, mu=0, tol=1e-8)["worst"] for tr in trajs)
    return CriterionResult(5, "total_energy_ledger", worst <= 1e-8, {"runs": 6, "worst_rel_defect": worst})


def random_chi_problem(rng, dim: int = 1, n=None):
    """Random step problem on a small mesh, one of the four constraint modes.

    ``n`` elements per direction, by default 2 to 5 (at most 6 nodes in 1D).
    """
    n = int(rng.integers(2, 6)) if n is None else n
    mesh = build_mesh(dim, 1.0, n)
    kind = rng.choice(["irreversible", "reversible", "log", "yosida"])
    model = MaterialModel(p=float(rng.choice([3.0, 4.0])),
                          phi=str(rng.choice(["power", "regularized"])),
                          gamma_coeffs=[float(rng.uniform(-1, 1)), float(rng.uniform(-1, 0))])
    tau = float(rng.uniform(0.01, 0.2))
    chi_prev = rng.uniform(0.2, 0.9, mesh.n_nodes)
    h = rng.uniform(-3, 3, mesh.n_nodes)
    if kind == "irreversible":
        model.mu, model.W = 1, "indicator0inf"
        prob = ChiStepProblem.irreversible(mesh, model, chi_prev, tau, h)
    elif kind == "yosida":
        model.mu, model.W = 1, "indicator0inf"
        prob = ChiStepProblem.isothermal_irreversible(mesh, model, chi_prev, tau, h)
    elif kind == "log":
        model.W = "log"
        model.log_c1, model.log_c2, model.log_c3 = 0.5, 0.0, 0.1
        prob = ChiStepProblem.reversible(mesh, model, chi_prev, tau, h)
    else:
        prob = ChiStepProblem.reversible(mesh, model, chi_prev, tau, h)
    return prob, str(kind)


def criterion_06(seed: int = 6) -> CriterionResult:
    """Step minimizer agrees with the exhaustive grid-search oracle on tiny 1D meshes."""
    rng = np.random.default_rng(seed)
    de, dx = 0.0, 0.0
    for _ in range(25):
        prob, _ = random_chi_problem(rng)
        chi, rep = minimize_chi(prob)
        chi_bf, e_bf = brute_force_minimize(prob)
        de = max(de, abs(rep.energy - e_bf))
        dx = max(dx, float(np.max(np.abs(chi - chi_bf))))
    return CriterionResult(6, "chi_oracle", de <= 2e-3 and dx <= 5e-2,
                           {"problems": 25, "max_energy_gap": de, "max_nodal_gap": dx})


def _central_difference(fun, x, h):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def criterion_07(seed: int = 7) -> CriterionResult:
    """Analytic gradients match central differences at random interior points."""
    rng = np.random.default_rng(seed)
    worst_phi, worst_full = 0.0, 0.0
    for i in range(100):
        dim = 1 + i % 2
        prob, kind = random_chi_problem(rng, dim=dim, n=int(rng.integers(3, 8)) if dim == 1 else 3)
        lo = np.where(np.isfinite(prob.lower), prob.lower, -0.5)
        hi = np.where(np.isfinite(prob.upper), prob.upper, 1.5)
        chi = lo + (hi - lo) * rng.uniform(0.1, 0.9, lo.size)
        mesh, model = prob.mesh, prob.model
        h = 1e-6
        fd = _central_difference(lambda c: discrete_phi(c, mesh, model), chi, h)
        an = p_laplacian_residual(chi, mesh, model)
        worst_phi = max(worst_phi, np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1e-12))
        # stay inside the box while differencing
        h = min(1e-6, 0.5 * float(np.min(np.minimum(chi - lo, hi - chi))))
        fd = _central_difference(lambda c: chi_energy(c, prob), chi, h)
        an = chi_energy_gradient(chi, prob)
        worst_full = max(worst_full, np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1e-12))
    ok = worst_phi < 1e-6 and worst_full < 1e-6
    return CriterionResult(7, "gradient_checks", ok,
                           {"configs": 100, "phi_rel_err": float(worst_phi), "energy_rel_err": float(worst_full)})


def criterion_08(seed: int = 8) -> CriterionResult:
    """Enthalpy inverse: closed form round trip and agreement with bisection."""
    rng = np.random.default_rng(seed)
    worst_rt, worst_bis = 0.0, 0.0
    for c0, sigma in [(1.0, 2.0), (0.5, 1.5), (2.0, 3.0), (1.0, 1.2)]:
        model = MaterialModel(c0=c0, sigma=sigma, sigma1=sigma)
        theta = np.concatenate([np.logspace(-6, 2, 50), rng.uniform(0, 10, 50)])
        rt = np.abs(model.theta_of_w(model.enthalpy(theta)) - theta)
        worst_rt = max(worst_rt, float(np.max(rt / np.maximum(1.0, theta))))
        w = model.enthalpy(theta)
        bis = np.abs(model.theta_of_w(w) - model.theta_of_w_bisect(w))
        worst_bis = max(worst_bis, float(np.max(bis / np.maximum(1.0, theta))))
    ok = worst_rt <= 1e-10 and worst_bis <= 1e-10
    return CriterionResult(8, "enthalpy_inverse", ok, {"round_trip": worst_rt, "vs_bisection": worst_bis})


def criterion_09(seed: int = 9) -> CriterionResult:
    """Empirical Korn constant is positive and weighted forms respect the scaled bound."""
    model = MaterialModel()
    out = {}
    ok = True
    for dim, n in [(1, 64), (2, 16)]:
        res = dg.korn_check(build_mesh(dim, 1.0, n), model, n_samples=200, eta_min=0.1, seed=seed)
        out[f"C1_{dim}d"] = res["C1_emp"]
        out[f"margin_{dim}d"] = res["worst_margin"]
        ok = ok and res["ok"]
    return CriterionResult(9, "korn_ellipticity", ok, out)


def criterion_10() -> CriterionResult:
    """Trajectories at halved time steps form a Cauchy sequence."""
    out, ok = {}, True
    for scheme in ("reversible", "irreversible"):
        rep = dg.tau_refinement(presets.reference(scheme, T=0.02, tau=2e-3), levels=4, min_rate=0.4)
        out[f"{scheme}_rate"] = rep["rate"]
        out[f"{scheme}_monotone"] = rep["monotone"]
        ok = ok and rep["pass"]
    return CriterionResult(10, "tau_refinement", ok, out)


def criterion_11() -> CriterionResult:
    """Quasi-stress norms stay bounded as delta vanishes; degenerate momentum residual small."""
    rep = dg.delta_sweep(presets.complete_damage(), [1e-1, 1e-2, 1e-3, 1e-4], chi_thresh=0.1, factor=10.0)
    res = max(r["momentum_residual"] for r in rep["table"])
    frac = rep["table"][-1]["min_chi"]
    return CriterionResult(11, "delta_sweep", rep["pass"],
                           {"ratio_mu": rep["ratio_mu"], "ratio_eta": rep["ratio_eta"],
                            "momentum_residual": res, "residual_tol": rep["residual_tol"], "min_chi": frac})


def criterion_12() -> CriterionResult:
    """Twin runs: distance between solutions scales linearly with the data perturbation."""
    rep = dg.continuous_dependence_experiment(presets.continuous_dependence(), [1e-1, 1e-2, 1e-3, 1e-4])
    ratios = [r["ratio"] for r in rep["table"]]
    return CriterionResult(12, "continuous_dependence", rep["pass"],
                           {"slope": rep["slope"], "min_ratio": min(ratios), "max_ratio": max(ratios)})


def criterion_13() -> CriterionResult:
    """Accumulated gradient functional of the enthalpy is uniform in tau."""
    out, ok = {}, True
    for scheme in ("irreversible", "reversible"):
        rep = dg.boccardo_gallouet_uniformity(presets.reference(scheme, T=0.02, tau=2e-3),
                                              levels=3, varsigma=0.5, factor=2.0)
        out[f"{scheme}_ratio"] = rep["ratio"]
        ok = ok and rep["pass"]
    return CriterionResult(13, "pi_functional_uniformity", ok, out)


def criterion_14(seed: int = 14) -> CriterionResult:
    """One-sided VI violation on converged irreversible steps is within 10x the solver tolerance."""
    trajs = _runs(seed, 10, ["irreversible", "isothermal_irreversible"])
    tol = trajs[0].stepper.tol.chi_tol
    vals = [r.vi_residual for tr in trajs for r in tr.reports if r.chi_converged]
    n_unconv = sum(not r.chi_converged for tr in trajs for r in tr.reports)
    worst = max(vals)
    return CriterionResult(14, "one_sided_vi", worst <= 10 * tol and n_unconv == 0,
                           {"steps": len(vals), "unconverged": n_unconv, "worst": worst, "bound": 10 * tol})


CRITERIA = {i: globals()[f"criterion_{i:02d}"] for i in range(1, 15)}


def evaluate(number: int, seed: int | None = None) -> CriterionResult:
    """Run one criterion; ``seed`` reshuffles the randomized ones."""
    fn = CRITERIA[number]
    kwargs = {}
    if seed is not None and "seed" in inspect.signature(fn).parameters:
        kwargs["seed"] = seed * 100 + number
    start = time.perf_counter()
    res = fn(**kwargs)
    res.seconds = time.perf_counter() - start
    return res


def run_all(numbers=None, echo=print, seed: int | None = None):
    results = []
    for i in numbers or sorted(CRITERIA):
        res = evaluate(i, seed)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
