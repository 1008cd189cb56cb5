"""Proximal fixed-point solver for contact inverse dynamics.

Given a reference joint velocity, recovers the contact impulses that realize
it and the actuation torque closing the loop.  The rigid case (zero
compliance) is handled through the proximal term; the convex mode (velocity
shift disabled) reproduces the divergence on sliding references that are
infeasible for the relaxed model.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .cones import desaxce, project_soc_diag_metric
from .problem import ResidualReport, _ncp_report

__all__ = [
    "IdProblem",
    "IdResult",
    "IdStatus",
    "check_id_ncp",
    "load_id_problem",
    "recover_torque",
    "solve_id",
]

DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class IdProblem:
    """Inverse-dynamics NCP instance: sigma = R lam + J v_ref + gamma."""

    v_ref: np.ndarray
    J: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    R_diag: np.ndarray | None = None
    rho: float = 1e-8

    def __post_init__(self):
        v_ref = np.asarray(self.v_ref, dtype=float).reshape(-1)
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        n = 3 * mu.shape[0]
        if J.shape != (n, v_ref.shape[0]):
            raise ValueError(f"J has shape {J.shape}, expected {(n, v_ref.shape[0])}")
        if gamma.shape[0] != n:
            raise ValueError(f"gamma has {gamma.shape[0]} components, expected {n}")
        if mu.shape[0] and not np.all(np.isfinite(mu) & (mu > 0.0)):
            raise ValueError("friction coefficients must be strictly positive and finite")
        r = np.zeros(n) if self.R_diag is None else np.asarray(self.R_diag, dtype=float).reshape(-1)
        if r.shape[0] != n:
            raise ValueError(f"R_diag has {r.shape[0]} components, expected {n}")
        if np.any(r < 0.0):
            raise ValueError("compliance entries must be nonnegative")
        if mu.shape[0] and np.any(r[0::3] != r[1::3]):
            raise ValueError("the two tangential compliance entries of each contact must be equal")
        if self.rho <= 0.0:
            raise ValueError("rho must be positive (mandatory in the rigid case)")
        object.__setattr__(self, "v_ref", v_ref)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "R_diag", r)

    @property
    def n_c(self) -> int:
        return self.mu.shape[0]

    def contact_ref_velocity(self) -> np.ndarray:
        return self.J @ self.v_ref


class IdStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


@dataclass
class IdResult:
    lam: np.ndarray
    status: IdStatus
    iterations: int

    @property
    def converged(self) -> bool:
        return self.status is IdStatus.CONVERGED


def solve_id(problem: IdProblem, n_iter: int = 1000, eps_abs: float = 1e-6,
             warm_start=None, de_saxce: bool = True) -> IdResult:
    """Fixed-point iteration on the metric projection of the ID subproblem.

    Each pass refreshes the velocity shift, then projects the unconstrained
    minimizer onto the friction cones under the diagonal metric R + rho Id.
    Terminates on the infinity norm of the impulse increment; impulses
    passing 1e12 report divergence (the expected convex-mode outcome on
    sliding references).
    """
    n = 3 * problem.n_c
    if n == 0:
        return IdResult(np.zeros(0), IdStatus.CONVERGED, 0)
    c_ref = problem.contact_ref_velocity()
    base = c_ref + problem.gamma
    r = problem.R_diag
    rho = problem.rho
    metric = r + rho
    mu = problem.mu

    lam = np.zeros(n) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    if lam.shape[0] != n:
        raise ValueError(f"warm start has {lam.shape[0]} components, expected {n}")

    new = np.empty(n)
    for k in range(1, n_iter + 1):
        sigma = r * lam + base
        s = desaxce(sigma, mu) if de_saxce else np.zeros(n)
        x = -(base + s - rho * lam) / metric
        for i in range(problem.n_c):
            b = slice(3 * i, 3 * i + 3)
            new[b] = project_soc_diag_metric(x[b], metric[b], mu[i])
        if not np.isfinite(new).all() or np.max(np.abs(new)) > DIVERGENCE_THRESHOLD:
            return IdResult(new.copy(), IdStatus.DIVERGED, k)
        delta = float(np.max(np.abs(new - lam)))
        lam[:] = new
        if delta <= eps_abs:
            return IdResult(lam, IdStatus.CONVERGED, k)
    return IdResult(lam, IdStatus.MAX_ITER, n_iter)


def check_id_ncp(problem: IdProblem, lam, de_saxce: bool = True) -> ResidualReport:
    """NCP violation report for the inverse-dynamics problem (oracle mirror)."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    n = 3 * problem.n_c
    if lam.shape[0] != n:
        raise ValueError(f"lambda has {lam.shape[0]} components, expected {n}")
    sigma = problem.R_diag * lam + problem.contact_ref_velocity() + problem.gamma
    return _ncp_report(lam, sigma, problem.mu, de_saxce=de_saxce)


def recover_torque(M, b, v, v_ref, dt: float, J, lam) -> np.ndarray:
    """Constant torque making the symplectic-Euler step land exactly on v_ref.

    Works at the impulse level: tau = M (v_ref - v)/dt + b - J^T lam / dt.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    v = np.asarray(v, dtype=float).reshape(-1)
    v_ref = np.asarray(v_ref, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    J = np.atleast_2d(np.asarray(J, dtype=float))
    lam = np.asarray(lam, dtype=float).reshape(-1)
    return M @ (v_ref - v) / dt + b - J.T @ lam / dt


def load_id_problem(path) -> tuple[IdProblem, dict]:
    """Read an inverse-dynamics problem file.

    Returns the problem plus a dict of the optional dynamics quantities
    (M, b, v, dt) when present, for torque recovery.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    problem = IdProblem(
        v_ref=np.asarray(doc["v_ref"], dtype=float),
        J=np.asarray(doc["J"], dtype=float),
        gamma=np.asarray(doc["gamma"], dtype=float),
        mu=np.asarray(doc["mu"], dtype=float),
        R_diag=np.asarray(doc["R_diag"], dtype=float) if "R_diag" in doc else None,
        rho=float(doc.get("rho", 1e-8)),
    )
    dynamics = {}
    if all(key in doc for key in ("M", "b", "v", "dt")):
        dynamics = {
            "M": np.asarray(doc["M"], dtype=float),
            "b": np.asarray(doc["b"], dtype=float),
            "v": np.asarray(doc["v"], dtype=float),
            "dt": float(doc["dt"]),
        }
    return problem, dynamics
