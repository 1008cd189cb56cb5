"""Contact NCP data model, problem assembly, and the residual oracle.

The ``check_ncp`` routine is implemented directly from the complementarity
conditions and independently of every solver; it is the ground-truth
correctness check used throughout the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack

from .cones import desaxce, soc_distance

__all__ = [
    "DENSE_CONTACT_LIMIT",
    "ContactProblem",
    "FactorizationError",
    "ResidualReport",
    "SpectrumEstimate",
    "assemble_delassus",
    "check_ncp",
    "condition_estimate",
    "load_problem",
    "save_problem",
]

# Contacts above this count switch G to column-compressed sparse storage.
DENSE_CONTACT_LIMIT = 64
SYMMETRY_RTOL = 1e-10


class FactorizationError(RuntimeError):
    """Cholesky factorization hit a non-positive leading minor."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(
            message or f"matrix is not positive definite (leading minor {pivot})"
        )


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ContactProblem:
    """Frictional-contact NCP instance over n_c three-dimensional contacts.

    Blocks are ordered (T1, T2, N) per contact and concatenated.  G maps
    impulses to contact-velocity changes, g holds the free contact-point
    velocities plus corrective terms, mu the per-contact friction
    coefficients, and R_diag a nonnegative diagonal compliance (all zeros in
    the rigid case).  Instances are immutable after construction and safe to
    share across threads.
    """

    G: object
    g: np.ndarray
    mu: np.ndarray
    R_diag: np.ndarray | None = None

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        n_c = mu.shape[0]
        n = 3 * n_c
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if g.shape[0] != n:
            raise ValueError(f"g has {g.shape[0]} components, expected {n}")
        if n_c and not np.all(np.isfinite(mu) & (mu > 0.0)):
            raise ValueError("friction coefficients must be strictly positive and finite")

        if self.R_diag is None:
            r = np.zeros(n)
        else:
            r = np.asarray(self.R_diag, dtype=float).reshape(-1)
        if r.shape[0] != n:
            raise ValueError(f"R_diag has {r.shape[0]} components, expected {n}")
        if n_c and np.any(r < 0.0):
            raise ValueError("compliance entries must be nonnegative")
        if n_c and np.any(r[0::3] != r[1::3]):
            raise ValueError("the two tangential compliance entries of each contact must be equal")

        G = self.G
        if sp.issparse(G):
            G = G.tocsc()
        else:
            G = np.asarray(G, dtype=float)
        if G.shape != (n, n):
            raise ValueError(f"G has shape {G.shape}, expected {(n, n)}")

        if n:
            scale = self._max_abs(G)
            asym = self._max_abs(G - G.T)
            if asym > SYMMETRY_RTOL * max(scale, 1.0):
                raise ValueError(
                    f"G is not symmetric within tolerance (asymmetry {asym:.3e}, scale {scale:.3e})"
                )
            G = (G + G.T) * 0.5
            diag = G.diagonal()
            if np.any(diag < -1e-12 * max(scale, 1.0)):
                raise ValueError("G has a negative diagonal entry")

        if sp.issparse(G):
            if n_c <= DENSE_CONTACT_LIMIT:
                G = np.asarray(G.todense())
            else:
                G = sp.csc_matrix(G)
        elif n_c > DENSE_CONTACT_LIMIT:
            G = sp.csc_matrix(G)

        if sp.issparse(G):
            G.data.flags.writeable = False
        else:
            G = _as_readonly(G)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g", _as_readonly(g))
        object.__setattr__(self, "mu", _as_readonly(mu))
        object.__setattr__(self, "R_diag", _as_readonly(r))

    @property
    def n_c(self) -> int:
        return self.mu.shape[0]

    @property
    def n(self) -> int:
        return 3 * self.n_c

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.G)

    def G_dense(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.G.todense())
        return np.array(self.G)

    def GR_dense(self) -> np.ndarray:
        """Dense G + diag(R), freshly allocated and writeable."""
        A = self.G_dense()
        A[np.diag_indices_from(A)] += self.R_diag
        return A

    def apply_GR(self, x: np.ndarray) -> np.ndarray:
        """Matrix-vector product (G + diag(R)) @ x without densifying."""
        return self.G @ x + self.R_diag * x

    @staticmethod
    def _max_abs(A) -> float:
        if sp.issparse(A):
            return float(np.max(np.abs(A.data))) if A.nnz else 0.0
        return float(np.max(np.abs(A))) if A.size else 0.0


@dataclass(frozen=True)
class ResidualReport:
    """Per-contact NCP violations for a candidate impulse vector.

    All entries are nonnegative; ``max_violation`` is the infinity norm over
    every family and equals zero exactly when the impulses solve the NCP.
    """

    signorini_comp: np.ndarray
    primal_cone_violation: np.ndarray
    dual_cone_violation: np.ndarray
    ncp_comp: np.ndarray
    max_violation: float


def assemble_delassus(M, J) -> np.ndarray:
    """J M^-1 J^T from a single Cholesky factorization of M.

    M must be symmetric positive-definite.  The inverse is never formed: the
    factor is applied to J^T through a triangular solve and the result is
    symmetrized against round-off.
    """
    M = np.ascontiguousarray(M, dtype=float)
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if J.shape[1] != M.shape[0]:
        raise ValueError(f"J has {J.shape[1]} columns, expected {M.shape[0]}")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if M.size and float(np.max(np.abs(M - M.T))) > SYMMETRY_RTOL * max(scale, 1.0):
        raise ValueError("M is not symmetric")
    if M.shape[0] == 0:
        return np.zeros((J.shape[0], J.shape[0]))

    c, info = lapack.dpotrf(M, lower=1)
    if info > 0:
        raise FactorizationError(info)
    if info < 0:
        raise ValueError(f"invalid argument {-info} to dpotrf")
    # X = L^-1 J^T, so that X^T X = J M^-1 J^T.
    x, info = lapack.dtrtrs(c, J.T, lower=1)
    if info != 0:
        raise FactorizationError(info, "triangular solve failed")
    G = x.T @ x
    return (G + G.T) * 0.5


def _ncp_report(lam: np.ndarray, sigma: np.ndarray, mu: np.ndarray,
                de_saxce: bool = True) -> ResidualReport:
    n_c = mu.shape[0]
    if n_c == 0:
        empty = np.zeros(0)
        return ResidualReport(empty, empty, empty, empty, 0.0)
    if de_saxce:
        w = sigma + desaxce(sigma, mu)
        signorini = np.abs(lam[2::3] * sigma[2::3])
    else:
        # The exact-Signorini product is only implied by complementarity under
        # the velocity shift; the convex variant measures the blockwise cone
        # complementarity instead (a converged convex solution zeroes it while
        # genuinely violating lambda_N * sigma_N).
        w = sigma.copy()
        signorini = np.abs(np.sum(lam.reshape(-1, 3) * sigma.reshape(-1, 3), axis=1))
    primal = np.empty(n_c)
    dual = np.empty(n_c)
    comp = np.empty(n_c)
    for i in range(n_c):
        li = lam[3 * i : 3 * i + 3]
        wi = w[3 * i : 3 * i + 3]
        primal[i] = soc_distance(li, mu[i])
        dual[i] = soc_distance(wi, 1.0 / mu[i])
        comp[i] = abs(float(li @ wi))
    max_violation = float(max(signorini.max(), primal.max(), dual.max(), comp.max()))
    return ResidualReport(signorini, primal, dual, comp, max_violation)


def check_ncp(problem: ContactProblem, lam, de_saxce: bool = True) -> ResidualReport:
    """Evaluate the NCP violations of a candidate impulse vector.

    Pure function of its inputs.  With ``de_saxce=False`` the velocity shift
    is dropped and the report measures the convex cone-complementarity
    conditions instead.
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape[0] != problem.n:
        raise ValueError(f"lambda has {lam.shape[0]} components, expected {problem.n}")
    sigma = problem.apply_GR(lam) + problem.g
    return _ncp_report(lam, sigma, problem.mu, de_saxce=de_saxce)


class SpectrumEstimate(NamedTuple):
    m: float
    L: float
    converged: bool


def _power_iteration(matvec, n: int, max_iter: int = 500, tol: float = 1e-9,
                     seed: int = 0) -> tuple[float, bool]:
    """Largest eigenvalue of a symmetric PSD operator by power iteration."""
    if n == 0:
        return 0.0, True
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        nw = float(np.linalg.norm(w))
        if nw <= 1e-300:
            return 0.0, True
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-30):
            return lam_new, True
        lam = lam_new
    return lam, False


def condition_estimate(problem: ContactProblem, eta: float, rho: float) -> SpectrumEstimate:
    """Extreme eigenvalues of G + R + (eta + rho) Id.

    The diagonal shift enters exactly; only the spectrum of G + R is
    estimated, the maximum by plain power iteration and the minimum by power
    iteration on the reflected operator L_max Id - (G + R).  Guarantees
    m >= eta for eta > 0.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    shift = eta + rho
    if problem.n_c == 0:
        return SpectrumEstimate(shift, shift, True)

    matvec = problem.apply_GR
    l_base, c1 = _power_iteration(matvec, problem.n)
    l_base = max(l_base, 0.0)
    if l_base == 0.0:
        return SpectrumEstimate(shift, shift, c1)
    reflected = lambda v: l_base * v - matvec(v)
    gap, c2 = _power_iteration(reflected, problem.n, seed=1)
    m_base = min(max(l_base - gap, 0.0), l_base)
    return SpectrumEstimate(m_base + shift, l_base + shift, c1 and c2)


def problem_to_dict(problem: ContactProblem, warm_start=None) -> dict:
    if problem.is_sparse:
        coo = problem.G.tocoo()
        G_entry = {"sparse": [[int(i), int(j), float(v)]
                              for i, j, v in zip(coo.row, coo.col, coo.data)]}
    else:
        G_entry = {"dense": [float(v) for v in np.asarray(problem.G).ravel()]}
    doc = {
        "n_c": problem.n_c,
        "G": G_entry,
        "g": [float(v) for v in problem.g],
        "mu": [float(v) for v in problem.mu],
        "R_diag": [float(v) for v in problem.R_diag],
    }
    if warm_start is not None:
        doc["warm_start"] = [float(v) for v in np.asarray(warm_start, dtype=float)]
    return doc


def problem_from_dict(doc: dict) -> tuple[ContactProblem, np.ndarray | None]:
    n_c = int(doc["n_c"])
    n = 3 * n_c
    G_entry = doc["G"]
    if "dense" in G_entry:
        G = np.asarray(G_entry["dense"], dtype=float).reshape(n, n)
    elif "sparse" in G_entry:
        triplets = G_entry["sparse"]
        if triplets:
            rows, cols, vals = zip(*triplets)
        else:
            rows, cols, vals = (), (), ()
        G = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
    else:
        raise ValueError("G must carry either a 'dense' or a 'sparse' entry")
    problem = ContactProblem(
        G=G,
        g=np.asarray(doc["g"], dtype=float),
        mu=np.asarray(doc["mu"], dtype=float),
        R_diag=np.asarray(doc["R_diag"], dtype=float),
    )
    warm = doc.get("warm_start")
    if warm is not None:
        warm = np.asarray(warm, dtype=float)
        if warm.shape[0] != n:
            raise ValueError(f"warm_start has {warm.shape[0]} components, expected {n}")
    return problem, warm


def save_problem(problem: ContactProblem, path, warm_start=None) -> None:
    """Write a problem file (UTF-8 JSON, floats emitted at full precision)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem, warm_start), fh)
        fh.write("\n")


def load_problem(path) -> tuple[ContactProblem, np.ndarray | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return problem_from_dict(doc)
