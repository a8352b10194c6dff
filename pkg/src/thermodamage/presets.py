"""Named reference scenarios used by the acceptance suite and the CLI."""
from __future__ import annotations

from .config import DataSpec, RunConfig

IRREVERSIBLE = ("irreversible", "isothermal_irreversible")


def reference(scheme: str = "reversible", dim: int = 1, n=32, T: float = 0.02, tau: float = 1e-3) -> RunConfig:
    """Forced run with a heat pulse, a body-force bump and a partly damaged start."""
    cfg = RunConfig(scheme=scheme)
    cfg.mesh.dim, cfg.mesh.n = dim, n
    cfg.mesh.extent = 1.0
    cfg.schedule.T, cfg.schedule.tau = T, tau
    m = cfg.material
    m.gamma_coeffs = [0.0, -1.0]
    m.delta = 0.01
    if scheme in IRREVERSIBLE:
        m.mu, m.W = 1, "indicator0inf"
    if scheme == "reversible_expansion":
        m.conductivity, m.q, m.rho, m.M = "power", 1.5, 0.5, 100.0
    cfg.ic.chi0 = DataSpec(kind="cosine", base=0.7, amplitude=0.2)
    cfg.ic.theta0 = DataSpec(kind="gaussian", base=0.2, amplitude=1.0, center=[0.5, 0.5])
    cfg.ic.u0 = DataSpec(kind="sine_bump", amplitude=[0.5] * dim)
    cfg.data.f = DataSpec(kind="gaussian", amplitude=[5.0] * dim, center=[0.3, 0.4])
    cfg.data.g = DataSpec(kind="constant", amplitude=1.0)
    cfg.data.theta_star = DataSpec(kind="constant", base=0.3)
    return cfg


def complete_damage(dim: int = 1, n=32, T: float = 0.05, tau: float = 2.5e-3, delta: float = 0.1) -> RunConfig:
    """Irreversible run in which a loaded region is driven to ``chi = 0``.

    ``a = b = chi``, no thermal expansion; both coefficients are shifted
    by ``delta``.
    """
    cfg = reference("irreversible", dim, n, T, tau)
    m = cfg.material
    m.a, m.b, m.rho = "identity", "identity", 0.0
    m.delta, m.delta_on_elastic = delta, True
    m.gamma_coeffs = [10.0]
    cfg.ic.chi0 = DataSpec(kind="cosine", base=0.5, amplitude=0.3)
    cfg.ic.u0 = DataSpec(kind="sine_bump", amplitude=[0.2] * dim)
    cfg.data.f = DataSpec(kind="gaussian", amplitude=[20.0] * dim, center=[0.5, 0.5], width=0.15)
    cfg.experiment.kind = "delta_sweep"
    return cfg


def continuous_dependence(dim: int = 1, n=32, T: float = 0.02, tau: float = 1e-3) -> RunConfig:
    """Isothermal reversible base run with constant viscosity and regularized flux."""
    cfg = reference("isothermal_reversible", dim, n, T, tau)
    m = cfg.material
    m.a, m.a_const, m.phi = "constant", 1.0, "regularized"
    cfg.ic.chi0 = DataSpec(kind="cosine", base=0.6, amplitude=0.2)
    cfg.data.theta_star = DataSpec(kind="gaussian", base=0.3, amplitude=0.5, width=0.2)
    cfg.experiment.kind = "continuous_dependence"
    return cfg


PRESETS = {
    "reference": reference,
    "complete_damage": complete_damage,
    "continuous_dependence": continuous_dependence,
}
