"""Over-relaxed projected Gauss-Seidel baseline on the second-order-cone NCP.

Sweeps contacts in index order; each contact sees the velocities induced by
the freshest impulses within the sweep and takes a projected step scaled by
the inverse of its block curvature bound (the largest eigenvalue of the
local 3x3 block of G + R).  The isotropic scaling keeps the step direction
intact, so the projection cannot spuriously land in the polar cone away
from optimality.  Convergence is declared on the full NCP violation
measure, evaluated every sweep.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from .admm import SolverResult, SolverSettings, SolverStatus, _STATUS_FROM_CODE
from .problem import ContactProblem

__all__ = ["PGS_MAX_ITER_DEFAULT", "pgs_settings", "solve_pgs"]

PGS_MAX_ITER_DEFAULT = 20000


def pgs_settings(**kwargs) -> SolverSettings:
    """SolverSettings with the PGS iteration-cap default (20000 sweeps)."""
    kwargs.setdefault("max_iter", PGS_MAX_ITER_DEFAULT)
    return SolverSettings(**kwargs)


def solve_pgs(problem: ContactProblem, settings: SolverSettings | None = None,
              omega: float = 1.0, warm_start=None) -> SolverResult:
    """Solve the contact NCP with over-relaxed projected Gauss-Seidel.

    ``omega`` is the relaxation factor in (0, 2).  ``iterations`` counts
    sweeps; the trace columns hold (sweep, primal cone distance, dual cone
    distance, complementarity, 0.0) since PGS carries no penalty parameter.
    """
    if not (0.0 < omega < 2.0):
        raise ValueError("omega must lie in (0, 2)")
    if settings is None:
        settings = pgs_settings()

    if problem.n_c == 0:
        empty = np.zeros(0)
        return SolverResult(
            lam=empty, sigma=empty.copy(), status=SolverStatus.CONVERGED,
            iterations=0, cholesky_updates=0,
            trace=np.zeros((0, 5)) if settings.record_trace else None,
            final_residuals=(0.0, 0.0, 0.0),
        )

    GR = np.ascontiguousarray(problem.GR_dense())
    g = np.asarray(problem.g, dtype=float)
    mu = np.asarray(problem.mu, dtype=float)

    # Per-contact inverse step: 1 / lambda_max of the local 3x3 block,
    # degenerate blocks regularized by eta.
    inv_step = np.empty(problem.n_c)
    for i in range(problem.n_c):
        b = slice(3 * i, 3 * i + 3)
        top = float(np.linalg.eigvalsh(GR[b, b])[-1])
        if top < 1e-12:
            top += settings.eta
        inv_step[i] = 1.0 / top

    lam = np.zeros(problem.n)
    if settings.warm_start_policy == "provided" and warm_start is not None:
        warm = np.asarray(warm_start, dtype=float).reshape(-1)
        if warm.shape[0] != problem.n:
            raise ValueError(f"warm start has {warm.shape[0]} components, expected {problem.n}")
        lam[:] = warm

    trace_buf = np.zeros((settings.max_iter if settings.record_trace else 0, 5))

    kern = _backend.kernels()
    status_code, sweeps, fail_iter, viol = kern.pgs_solve(
        GR, g, mu, lam, float(settings.eps_abs), int(settings.max_iter),
        float(omega), inv_step, bool(settings.de_saxce), trace_buf,
    )

    sigma = GR @ lam + g
    return SolverResult(
        lam=lam, sigma=sigma, status=_STATUS_FROM_CODE[status_code],
        iterations=sweeps, cholesky_updates=0,
        trace=trace_buf[:sweeps].copy() if settings.record_trace else None,
        fail_iteration=fail_iter if fail_iter >= 0 else None,
        final_residuals=(0.0, 0.0, viol),
    )
