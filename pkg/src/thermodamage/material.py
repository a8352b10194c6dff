"""Constitutive functions: heat capacity, enthalpy map, conductivity, flux,
phase potentials, coefficient functions and truncations.

All functions accept scalars or numpy arrays and are vectorized.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from numpy.polynomial import polynomial as P

W_MODES = ("indicator01", "log", "indicator0inf")
COEFF_MODES = ("identity", "one_minus", "constant")
CONDUCTIVITY_MODES = ("ratio_bounded", "power")
PHI_MODES = ("power", "regularized")

# clip for evaluating the logarithmic potential at (numerically) open endpoints
LOG_EPS = 1e-14


@dataclass
class MaterialModel:
    """Constitutive data of the coupled thermo-visco-elastic damage model.

    Heat capacity is ``c(theta) = c0 (1 + theta)^(sigma - 1)``; ``c1`` and
    ``sigma1`` are the upper growth constants and only enter validation.
    The conductivity ratio ``K(w)`` is either bounded between ``c2`` and
    ``c3`` (``ratio_bounded``) or grows like ``c10 (w^(2q) + 1)``
    (``power``).

    ``W`` is the phase potential: ``indicator01`` (box [0, 1] plus the
    polynomial ``gamma_hat``), ``indicator0inf`` (box [0, inf) plus
    ``gamma_hat``) or ``log`` (entropy terms with ``log_c1..log_c3``).
    ``gamma_coeffs`` are the ascending polynomial coefficients of
    ``gamma = gamma_hat'``; ``gamma_hat(0) = 0``.
    """

    c0: float = 1.0
    c1: float = 1.0
    sigma: float = 2.0
    sigma1: float = 2.0
    conductivity: str = "ratio_bounded"
    c2: float = 1.0
    c3: float = 1.0
    c10: float = 1.0
    q: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    ell1: float = 1.0
    ell2: float = 1.0
    rho: float = 0.0
    mu: int = 0
    delta: float = 0.0
    delta_on_elastic: bool = False
    p: float = 4.0
    phi: str = "power"
    a: str = "identity"
    a_const: float = 1.0
    b: str = "identity"
    b_const: float = 1.0
    W: str = "indicator01"
    gamma_coeffs: list = field(default_factory=list)
    log_c1: float = 0.0
    log_c2: float = 0.0
    log_c3: float = 0.0
    M: float = 1e6

    # ------------------------------------------------------------------
    def validate(self, dim: int) -> "MaterialModel":
        """Check the structural hypotheses for spatial dimension ``dim``.

        Raises
        ------
        ValueError
            With a message naming the violated condition.
        """
        errs = []
        if not self.sigma > 2 * dim / (dim + 2):
            errs.append(f"sigma={self.sigma} must exceed 2*dim/(dim+2)={2 * dim / (dim + 2):.6g}")
        if self.sigma1 < self.sigma:
            errs.append("sigma1 must be >= sigma")
        if not (self.c1 >= self.c0 > 0):
            errs.append("need c1 >= c0 > 0")
        if not self.p > dim:
            errs.append(f"p={self.p} must exceed dim={dim}")
        if self.p < 2:
            errs.append("p must be >= 2")
        if self.conductivity not in CONDUCTIVITY_MODES:
            errs.append(f"conductivity must be one of {CONDUCTIVITY_MODES}")
        elif self.conductivity == "power":
            if self.q < (dim + 2) / (2 * dim):
                errs.append(f"q={self.q} must be >= (dim+2)/(2*dim)={(dim + 2) / (2 * dim):.6g}")
            if self.c10 <= 0:
                errs.append("c10 must be positive")
        elif not (0 < self.c2 <= self.c3):
            errs.append("need 0 < c2 <= c3")
        for name in ("lambda1", "lambda2", "ell1", "ell2"):
            if not getattr(self, name) > 0:
                errs.append(f"{name} must be positive")
        if self.delta < 0:
            errs.append("delta must be >= 0")
        if self.mu not in (0, 1):
            errs.append("mu must be 0 or 1")
        if self.phi not in PHI_MODES:
            errs.append(f"phi must be one of {PHI_MODES}")
        if self.W not in W_MODES:
            errs.append(f"W must be one of {W_MODES}")
        for name in ("a", "b"):
            mode = getattr(self, name)
            if mode not in COEFF_MODES:
                errs.append(f"{name} must be one of {COEFF_MODES}")
            elif mode == "constant" and getattr(self, name + "_const") < 0:
                errs.append(f"{name}_const must be >= 0")
        if self.W == "log" and len(self.gamma_coeffs):
            errs.append("W=log takes log_c1..log_c3; gamma_coeffs must be empty")
        if self.mu == 1 and self.W != "indicator0inf":
            errs.append(
                "irreversible evolution (mu=1) requires W=indicator0inf: the convex part of W "
                "must be the indicator of [0, inf), the irreversibility constraint supplies the upper bound"
            )
        if self.M <= 0:
            errs.append("M must be positive")
        if errs:
            raise ValueError("invalid material model: " + "; ".join(errs))
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_coeffs"] = [float(c) for c in self.gamma_coeffs]
        return d

    # -- heat capacity and enthalpy ---------------------------------------
    def heat_capacity(self, theta):
        theta = _nonneg(theta, "temperature")
        return self.c0 * (1.0 + theta) ** (self.sigma - 1.0)

    def enthalpy(self, theta):
        theta = _nonneg(theta, "temperature")
        return self.c0 * ((1.0 + theta) ** self.sigma - 1.0) / self.sigma

    def theta_of_w(self, w):
        """Inverse enthalpy, extended by 0 for negative arguments."""
        w = np.asarray(w, dtype=float)
        a = self.sigma / self.c0
        out = np.power(1.0 + a * np.maximum(w, 0.0), 1.0 / self.sigma) - 1.0
        return _like(np.where(w > 0, out, 0.0), w)

    def theta_of_w_bisect(self, w, tol=1e-15, max_iter=200):
        """Invert the enthalpy by bisection (no closed form used)."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        out = np.zeros_like(w)
        for i, wi in enumerate(w):
            if wi <= 0:
                continue
            lo, hi = 0.0, 1.0
            while self.enthalpy(hi) < wi:
                hi *= 2.0
            for _ in range(max_iter):
                mid = 0.5 * (lo + hi)
                if self.enthalpy(mid) < wi:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= tol * max(1.0, hi):
                    break
            out[i] = 0.5 * (lo + hi)
        return out

    def theta_growth_constants(self):
        """Constants ``(d0, d1)`` with ``d1 (w^(1/sigma1) - 1) <= Theta(w) <= d0 (w^(1/sigma) + 1)``."""
        a = self.sigma / self.c0
        s = 1.0 / self.sigma
        d0 = max(1.0, 2.0 ** (s - 1.0)) * max(1.0, a ** s)
        d1 = (1.0 - (1.0 + a) ** (-s)) * a ** s
        return d0, d1

    # -- conductivity -----------------------------------------------------
    def conductivity_ratio(self, w):
        w = np.asarray(w, dtype=float)
        if self.conductivity == "power":
            return _like(self.c10 * (np.maximum(w, 0.0) ** (2.0 * self.q) + 1.0), w)
        th = self.theta_of_w(w)
        return _like(self.c2 + (self.c3 - self.c2) * th / (1.0 + th), w)

    def conductivity_bounds(self):
        """``(lower, upper)`` for ``K``; upper is ``inf`` in power mode."""
        if self.conductivity == "power":
            return self.c10, np.inf
        return self.c2, self.c3

    def T_M(self, r):
        return np.clip(r, -self.M, self.M)

    def K_M(self, r):
        return self.conductivity_ratio(self.T_M(r))

    def Theta_M(self, r):
        return self.theta_of_w(self.T_M(r))

    # -- gradient flux ------------------------------------------------------
    def flux_d(self, zeta):
        """Flux ``d(zeta) = grad phi(zeta)`` for vectors along the last axis."""
        zeta = np.asarray(zeta, dtype=float)
        s = np.sum(zeta * zeta, axis=-1, keepdims=True)
        if self.phi == "power":
            return s ** ((self.p - 2.0) / 2.0) * zeta
        return (1.0 + s) ** ((self.p - 2.0) / 2.0) * zeta

    def phi_density(self, zeta):
        """``phi(zeta)``, shifted in regularized mode so that ``phi(0) = 0``."""
        zeta = np.asarray(zeta, dtype=float)
        s = np.sum(zeta * zeta, axis=-1)
        if self.phi == "power":
            return s ** (self.p / 2.0) / self.p
        return ((1.0 + s) ** (self.p / 2.0) - 1.0) / self.p

    # -- phase potential ------------------------------------------------------
    def _gamma_poly(self):
        if self.W == "log":
            return np.array([-self.log_c2, -2.0 * self.log_c1])
        c = np.asarray(self.gamma_coeffs, dtype=float)
        return c if c.size else np.zeros(1)

    def gamma(self, chi):
        return P.polyval(np.asarray(chi, dtype=float), self._gamma_poly())

    def gamma_prime(self, chi):
        return P.polyval(np.asarray(chi, dtype=float), P.polyder(self._gamma_poly()))

    def gamma_hat(self, chi):
        val = P.polyval(np.asarray(chi, dtype=float), P.polyint(self._gamma_poly()))
        return val - self.log_c3 if self.W == "log" else val

    def feasible_interval(self):
        """Closed box of the convex part of ``W`` (log mode: open (0, 1))."""
        if self.W == "indicator0inf":
            return 0.0, np.inf
        return 0.0, 1.0

    def beta_hat(self, chi):
        """Convex part of ``W``: entropy in log mode, indicator otherwise."""
        chi = np.asarray(chi, dtype=float)
        lo, hi = self.feasible_interval()
        if self.W == "log":
            inside = (chi >= 0) & (chi <= 1)
            r = np.clip(chi, 0.0, 1.0)
            ent = _xlogx(r) + _xlogx(1.0 - r)
            return np.where(inside, ent, np.inf)
        return np.where((chi >= lo) & (chi <= hi), 0.0, np.inf)

    def beta_log(self, chi):
        """Derivative of the entropy part in log mode, ``ln(r / (1 - r))``."""
        r = np.clip(np.asarray(chi, dtype=float), LOG_EPS, 1.0 - LOG_EPS)
        return np.log(r) - np.log1p(-r)

    def beta_log_prime(self, chi):
        r = np.clip(np.asarray(chi, dtype=float), LOG_EPS, 1.0 - LOG_EPS)
        return 1.0 / r + 1.0 / (1.0 - r)

    def W_value(self, chi):
        """``W = beta_hat + gamma_hat``; ``+inf`` outside the domain."""
        return self.beta_hat(chi) + self.gamma_hat(chi)

    # -- coefficient functions a, b -----------------------------------------
    def coeff(self, name, chi):
        mode = getattr(self, name)
        chi = np.asarray(chi, dtype=float)
        if mode == "identity":
            return chi.copy()
        if mode == "one_minus":
            return 1.0 - chi
        return np.full_like(chi, getattr(self, name + "_const"))

    def coeff_prime(self, name, chi):
        mode = getattr(self, name)
        chi = np.asarray(chi, dtype=float)
        return np.full_like(chi, {"identity": 1.0, "one_minus": -1.0, "constant": 0.0}[mode])

    # -- isotropic tensors ------------------------------------------------------
    def elastic_density(self, eps):
        """``eps : R_e eps`` for symmetric tensors on the last two axes."""
        return _iso_density(eps, self.lambda1, self.lambda2)

    def viscous_density(self, eps):
        return _iso_density(eps, self.ell1, self.ell2)


def _iso_density(eps, l1, l2):
    eps = np.asarray(eps, dtype=float)
    tr = np.trace(eps, axis1=-2, axis2=-1)
    return l1 * tr * tr + 2.0 * l2 * np.sum(eps * eps, axis=(-2, -1))


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def _nonneg(x, what):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError(f"{what} must be nonnegative")
    return x if x.ndim else float(x)


def _like(out, ref):
    return out if np.ndim(ref) else float(out)
