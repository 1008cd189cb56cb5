"""Second-order friction-cone geometry.

Projections under the identity and diagonal metrics, dual-cone membership,
and the velocity shift that turns the frictional disjunction into a cone
complementarity.  Contact blocks are laid out as (T1, T2, N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FrictionCone",
    "project_soc",
    "project_cone_product",
    "project_soc_diag_metric",
    "desaxce",
    "dual_cone_contains",
    "soc_distance",
]

DEFAULT_MEMBERSHIP_TOL = 1e-10


@dataclass(frozen=True)
class FrictionCone:
    """Second-order cone {x : ||x_T||_2 <= mu * x_N}."""

    mu: float

    def __post_init__(self):
        if not (self.mu > 0.0 and np.isfinite(self.mu)):
            raise ValueError(f"friction coefficient must be positive and finite, got {self.mu}")

    def contains(self, x, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(x[0] * x[0] + x[1] * x[1])) <= self.mu * x[2] + tol

    def dual(self) -> "FrictionCone":
        return FrictionCone(1.0 / self.mu)


def project_soc(x, mu: float) -> np.ndarray:
    """Orthogonal projection of a 3-vector onto the friction cone K_mu.

    Closed form with three cases: the point is already inside the cone, the
    point lies in the polar cone (projects to the apex), or the generic
    boundary case.  Total and idempotent.
    """
    x = np.asarray(x, dtype=float)
    nt = np.sqrt(x[0] * x[0] + x[1] * x[1])
    if nt <= mu * x[2]:
        return x.copy()
    if mu * nt <= -x[2]:
        return np.zeros(3)
    # Generic case: nt > 0 here, otherwise one of the branches above fired.
    yn = (mu * nt + x[2]) / (mu * mu + 1.0)
    scale = mu * yn / nt
    return np.array([scale * x[0], scale * x[1], yn])


def project_cone_product(x, mu) -> np.ndarray:
    """Blockwise projection onto the Cartesian product of friction cones."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x.shape[0] != 3 * mu.shape[0]:
        raise ValueError(f"expected {3 * mu.shape[0]} components, got {x.shape[0]}")
    out = np.empty_like(x)
    for i in range(mu.shape[0]):
        out[3 * i : 3 * i + 3] = project_soc(x[3 * i : 3 * i + 3], mu[i])
    return out


def project_soc_diag_metric(x, d, mu: float) -> np.ndarray:
    """Projection onto K_mu under the metric induced by a positive diagonal d.

    Uses the rescaling identity: project D^(1/2) x onto the cone with the
    modified coefficient sqrt(d_T / d_N) * mu, then map back with D^(-1/2).
    Requires the two tangential entries of d to be equal (the identity needs
    tangential isotropy).
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if d.shape != (3,):
        raise ValueError("metric must have exactly 3 diagonal entries")
    if not np.all(d > 0.0):
        raise ValueError("metric diagonal entries must be positive")
    if d[0] != d[1]:
        raise ValueError(f"tangential metric entries must be equal, got {d[0]} and {d[1]}")
    mu_t = np.sqrt(d[0] / d[2]) * mu
    root = np.sqrt(d)
    return project_soc(root * x, mu_t) / root


def desaxce(sigma, mu) -> np.ndarray:
    """Per-contact velocity shift (0, 0, mu * ||sigma_T||).

    Output blocks have zero tangential components and a nonnegative normal
    component regardless of the sign of sigma_N.
    """
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if sigma.shape[0] != 3 * mu.shape[0]:
        raise ValueError(f"expected {3 * mu.shape[0]} components, got {sigma.shape[0]}")
    blocks = sigma.reshape(-1, 3)
    out = np.zeros_like(blocks)
    out[:, 2] = mu * np.sqrt(blocks[:, 0] ** 2 + blocks[:, 1] ** 2)
    return out.ravel()


def dual_cone_contains(x, mu: float, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
    """Membership test for the dual cone K_{1/mu}."""
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(x[0] * x[0] + x[1] * x[1])) <= x[2] / mu + tol


def soc_distance(x, mu: float) -> float:
    """Euclidean distance of a 3-vector to the friction cone K_mu."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - project_soc(x, mu)))
