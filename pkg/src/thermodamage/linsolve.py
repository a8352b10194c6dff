"""Jacobi-preconditioned conjugate gradients for the elliptic sub-steps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised by callers that require a converged solve."""


@dataclass
class SolveStats:
    iterations: int
    final_residual: float
    converged: bool


def cg_solve(A, b, tol: float = 1e-10, max_iter: int | None = None,
             x0=None, singular: bool = False, consistency_tol: float = 1e-10):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    Parameters
    ----------
    A : sparse matrix or ndarray
    b : ndarray
    tol : float
        Relative residual target, ``||A x - b|| <= tol ||b||``.
    max_iter : int, optional
        Defaults to ``10 * n``.
    x0 : ndarray, optional
        Initial guess.
    singular : bool
        Treat ``A`` as a pure-Neumann operator whose kernel is the constants.
        The right side must then have zero sum; the returned solution has
        zero mean.

    Returns
    -------
    x : ndarray
    stats : SolveStats
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    if singular:
        scale = np.sum(np.abs(b)) + 1e-300
        if abs(b.sum()) > consistency_tol * max(scale, 1.0):
            raise ValueError("right-hand side is inconsistent with the constant kernel")
        b = b - b.mean()
    diag = A.diagonal() if hasattr(A, "diagonal") else np.diag(A)
    if np.any(diag <= 0):
        raise ValueError("matrix has non-positive diagonal entries")
    inv_d = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveStats(0, 0.0, True)
    it = 0
    # restart from the true residual if recursion drift hides the final digits
    for _restart in range(4):
        r = b - A @ x
        if singular:
            r -= r.mean()
        res = np.linalg.norm(r)
        if res <= tol * bnorm:
            break
        z = inv_d * r
        pdir = z.copy()
        rz = r @ z
        while res > tol * bnorm and it < max_iter:
            Ap = A @ pdir
            pAp = pdir @ Ap
            if pAp <= 0:
                break
            alpha = rz / pAp
            x += alpha * pdir
            r -= alpha * Ap
            if singular:
                r -= r.mean()
            z = inv_d * r
            rz_new = r @ z
            pdir = z + (rz_new / rz) * pdir
            rz = rz_new
            it += 1
            res = np.linalg.norm(r)
        if it >= max_iter:
            break
    if singular:
        x -= x.mean()
    true_res = np.linalg.norm(b - A @ x)
    return x, SolveStats(it, float(true_res), bool(true_res <= tol * bnorm))


def solve_or_raise(A, b, **kwargs):
    x, stats = cg_solve(A, b, **kwargs)
    if not stats.converged:
        raise ConvergenceError(
            f"CG did not converge: residual {stats.final_residual:.3e} after {stats.iterations} iterations"
        )
    return x, stats
