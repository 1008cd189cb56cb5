"""Proximal-ADMM contact solver with adaptive penalty strategies.

The inner loop alternates a regularized linear solve, a friction-cone
projection and a multiplier update, while the cascaded velocity shift is
refreshed every iteration.  The penalty rho is adapted either linearly
(multiplicative factors) or spectrally (pinned to sqrt(mL) * kappa^p with an
adaptive exponent); both share the same residual-ratio trigger, so ablations
isolate the magnitude rule.  Every penalty change costs one Cholesky
refactorization, which the result accounts for.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, lapack

from . import _backend
from .cones import desaxce
from .problem import ContactProblem, FactorizationError, condition_estimate

__all__ = [
    "Linear",
    "Spectral",
    "SolverSettings",
    "SolverStatus",
    "SolverResult",
    "ShiftedFactorization",
    "factorize_shifted",
    "residuals",
    "solve",
    "update_rho_linear",
    "update_rho_spectral",
]

P_CLAMP = 2.0
RHO_EQUAL_RTOL = 1e-15


@dataclass(frozen=True)
class Linear:
    """Multiplicative penalty update driven by the primal/dual residual ratio."""

    tau_inc: float = 2.0
    tau_dec: float = 2.0

    def __post_init__(self):
        if not (self.tau_inc > 1.0 and self.tau_dec > 1.0):
            raise ValueError("tau_inc and tau_dec must exceed 1")


@dataclass(frozen=True)
class Spectral:
    """Penalty pinned at sqrt(mL) * kappa^p with an adaptively stepped exponent p."""

    p_inc: float = 0.05
    p_dec: float = 0.05
    p_init: float = 0.0

    def __post_init__(self):
        if not (self.p_inc > 0.0 and self.p_dec > 0.0):
            raise ValueError("p_inc and p_dec must be positive")


@dataclass
class SolverSettings:
    """Tolerances, iteration caps and penalty-adaptation parameters."""

    eps_abs: float = 1e-6
    max_iter: int = 1000
    eta: float = 1e-6
    rho_init: float | None = None
    strategy: Linear | Spectral = field(default_factory=Spectral)
    alpha: float = 10.0
    warm_start_policy: str = "zero"  # "zero" | "provided"
    de_saxce: bool = True
    record_trace: bool = False

    def __post_init__(self):
        if self.eps_abs <= 0.0:
            raise ValueError("eps_abs must be positive")
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.alpha <= 1.0:
            raise ValueError("alpha must exceed 1")
        if self.warm_start_policy not in ("zero", "provided"):
            raise ValueError(f"unknown warm start policy {self.warm_start_policy!r}")
        if self.rho_init is not None and self.rho_init <= 0.0:
            raise ValueError("rho_init must be positive")


class SolverStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"


_STATUS_FROM_CODE = {
    0: SolverStatus.CONVERGED,
    1: SolverStatus.MAX_ITER,
    2: SolverStatus.NUMERICAL_FAILURE,
}


@dataclass
class SolverResult:
    """Solver output: impulses, contact velocities and run accounting."""

    lam: np.ndarray
    sigma: np.ndarray
    status: SolverStatus
    iterations: int
    cholesky_updates: int
    trace: np.ndarray | None = None
    fail_iteration: int | None = None
    final_residuals: tuple[float, float, float] | None = None
    z: np.ndarray | None = None
    s: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.status is SolverStatus.CONVERGED


def update_rho_linear(r_prim_norm: float, r_dual_norm: float, rho: float,
                      tau_inc: float, tau_dec: float, alpha: float) -> tuple[float, bool]:
    """Multiplicative rho update keeping both residual norms inside an alpha-tube."""
    inc = r_prim_norm >= alpha * r_dual_norm
    dec = r_dual_norm >= alpha * r_prim_norm
    if inc and dec:  # only possible when both norms vanish
        return rho, False
    if inc:
        new = tau_inc * rho
    elif dec:
        new = rho / tau_dec
    else:
        new = rho
    return new, new != rho


def update_rho_spectral(r_prim_norm: float, r_dual_norm: float, p: float,
                        m: float, L: float, p_inc: float, p_dec: float,
                        alpha: float) -> tuple[float, float, bool]:
    """Spectral rho update: step the exponent p, then pin rho = sqrt(mL) kappa^p.

    ``changed`` reports whether the tube test fired; on a perfectly
    conditioned problem (kappa = 1) the returned rho is sqrt(mL) regardless.
    """
    if not (0.0 < m <= L):
        raise ValueError("extreme eigenvalues must satisfy 0 < m <= L")
    inc = r_prim_norm >= alpha * r_dual_norm
    dec = r_dual_norm >= alpha * r_prim_norm
    changed = False
    if inc and dec:
        pass
    elif inc:
        p = min(max(p + p_inc, -P_CLAMP), P_CLAMP)
        changed = True
    elif dec:
        p = min(max(p - p_dec, -P_CLAMP), P_CLAMP)
        changed = True
    rho = float(np.sqrt(m * L) * (L / m) ** p)
    return rho, p, changed


def residuals(f, y, z, prev_f, prev_y, rho: float, eta: float):
    """Primal, dual and per-contact complementarity residual vectors."""
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    r_prim = f - y
    r_dual = eta * (f - np.asarray(prev_f, dtype=float)) \
        + rho * (y - np.asarray(prev_y, dtype=float))
    blocks_f = f.reshape(-1, 3)
    blocks_z = z.reshape(-1, 3)
    r_comp = np.abs(np.sum(blocks_f * blocks_z, axis=1))
    return r_prim, r_dual, r_comp


class ShiftedFactorization:
    """Cholesky factorization of a PSD matrix plus a positive diagonal shift."""

    def __init__(self, A: np.ndarray, shift: float):
        if shift <= 0.0:
            raise ValueError("diagonal shift must be positive")
        K = np.array(A, dtype=float)
        K[np.diag_indices_from(K)] += shift
        c, info = lapack.dpotrf(K, lower=1)
        if info != 0:
            raise FactorizationError(max(info, 1))
        self._factor = (c, True)
        self.shift = shift
        self.n = K.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, np.asarray(rhs, dtype=float))


def factorize_shifted(problem: ContactProblem, eta: float, rho: float) -> ShiftedFactorization:
    """Factorize G + R + (eta + rho) Id for repeated linear solves."""
    return ShiftedFactorization(problem.GR_dense(), eta + rho)


def _empty_result(settings: SolverSettings) -> SolverResult:
    empty = np.zeros(0)
    return SolverResult(
        lam=empty, sigma=empty.copy(), status=SolverStatus.CONVERGED,
        iterations=0, cholesky_updates=1,
        trace=np.zeros((0, 5)) if settings.record_trace else None,
        final_residuals=(0.0, 0.0, 0.0), z=empty.copy(), s=empty.copy(),
    )


def solve(problem: ContactProblem, settings: SolverSettings | None = None,
          warm_start=None) -> SolverResult:
    """Solve the contact NCP with proximal ADMM.

    With the ``"provided"`` warm-start policy the impulse guess seeds f and y
    directly and the dual variable is reconstructed from the induced contact
    velocity, so an exact solution converges in one iteration.
    """
    if settings is None:
        settings = SolverSettings()
    if problem.n_c == 0:
        return _empty_result(settings)

    n = problem.n
    GR = np.ascontiguousarray(problem.GR_dense())
    g = np.asarray(problem.g, dtype=float)
    mu = np.asarray(problem.mu, dtype=float)
    strategy = settings.strategy
    spectral = isinstance(strategy, Spectral)

    if spectral:
        est = condition_estimate(problem, settings.eta, 0.0)
        spec_m, spec_L = est.m, est.L
    else:
        spec_m = spec_L = 1.0

    if settings.rho_init is not None:
        rho0 = settings.rho_init
    elif spectral:
        p0 = min(max(strategy.p_init, -P_CLAMP), P_CLAMP)
        rho0 = float(np.sqrt(spec_m * spec_L) * (spec_L / spec_m) ** p0)
    else:
        rho0 = 1.0

    f = np.zeros(n)
    y = np.zeros(n)
    z = np.zeros(n)
    s = np.zeros(n)
    if settings.warm_start_policy == "provided" and warm_start is not None:
        warm = np.asarray(warm_start, dtype=float).reshape(-1)
        if warm.shape[0] != n:
            raise ValueError(f"warm start has {warm.shape[0]} components, expected {n}")
        f[:] = warm
        y[:] = warm
        sigma0 = problem.apply_GR(warm) + g
        z[:] = sigma0
        if settings.de_saxce:
            z += desaxce(sigma0, mu)

    trace_buf = np.zeros((settings.max_iter if settings.record_trace else 0, 5))

    kern = _backend.kernels()
    if spectral:
        tau_inc = tau_dec = 2.0
        p_inc, p_dec, p_init = strategy.p_inc, strategy.p_dec, strategy.p_init
    else:
        tau_inc, tau_dec = strategy.tau_inc, strategy.tau_dec
        p_inc = p_dec = 0.05
        p_init = 0.0

    status_code, iterations, chol_updates, fail_iter, _rho, rp, rd, rc = kern.admm_solve(
        GR, g, mu, f, y, z, s,
        float(settings.eta), float(rho0), float(settings.eps_abs),
        int(settings.max_iter), bool(spectral),
        float(tau_inc), float(tau_dec), float(p_inc), float(p_dec), float(p_init),
        float(spec_m), float(spec_L), float(settings.alpha),
        bool(settings.de_saxce), trace_buf,
    )

    status = _STATUS_FROM_CODE[status_code]
    if settings.de_saxce:
        sigma = z - desaxce(z, mu)
    else:
        sigma = z.copy()

    return SolverResult(
        lam=y, sigma=sigma, status=status, iterations=iterations,
        cholesky_updates=chol_updates,
        trace=trace_buf[:iterations].copy() if settings.record_trace else None,
        fail_iteration=fail_iter if fail_iter >= 0 else None,
        final_residuals=(rp, rd, rc),
        z=z, s=s,
    )
