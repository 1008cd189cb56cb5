"""Pure-Python (numpy) implementations of the solver hot loops.

These mirror the compiled kernels in ``_kernels.pyx`` step for step and are
selected automatically when the extension is unavailable (or forced via the
``PROXCONTACT_BACKEND`` environment variable).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_FAILURE = 2

P_CLAMP = 2.0
RHO_EQUAL_RTOL = 1e-15


def _project_soc_inplace(x: np.ndarray, mu: float) -> None:
    nt = np.sqrt(x[0] * x[0] + x[1] * x[1])
    if nt <= mu * x[2]:
        return
    if mu * nt <= -x[2]:
        x[:] = 0.0
        return
    yn = (mu * nt + x[2]) / (mu * mu + 1.0)
    scale = mu * yn / nt
    x[0] *= scale
    x[1] *= scale
    x[2] = yn


def _project_product(x: np.ndarray, mu: np.ndarray) -> None:
    for i in range(mu.shape[0]):
        _project_soc_inplace(x[3 * i : 3 * i + 3], mu[i])


def _desaxce_into(out: np.ndarray, z: np.ndarray, mu: np.ndarray) -> None:
    out[:] = 0.0
    for i in range(mu.shape[0]):
        out[3 * i + 2] = mu[i] * np.sqrt(z[3 * i] ** 2 + z[3 * i + 1] ** 2)


def _soc_distance(x0: float, x1: float, x2: float, mu: float) -> float:
    nt = np.sqrt(x0 * x0 + x1 * x1)
    if nt <= mu * x2:
        return 0.0
    if mu * nt <= -x2:
        return np.sqrt(nt * nt + x2 * x2)
    yn = (mu * nt + x2) / (mu * mu + 1.0)
    scale = mu * yn / nt if nt > 0.0 else 0.0
    d0 = x0 - scale * x0
    d1 = x1 - scale * x1
    d2 = x2 - yn
    return np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)


def _factor(GR: np.ndarray, shift: float, buf: np.ndarray):
    np.copyto(buf, GR)
    buf[np.diag_indices_from(buf)] += shift
    return cho_factor(buf, lower=True, overwrite_a=False, check_finite=False)


def admm_solve(GR, g, mu, f, y, z, s, eta, rho_init, eps_abs, max_iter,
               spectral, tau_inc, tau_dec, p_inc, p_dec, p_init,
               spec_m, spec_L, alpha, de_saxce, trace):
    """Proximal-ADMM loop over the cascaded NCP.

    ``f``, ``y``, ``z`` and ``s`` are modified in place and hold the final
    iterates on return.  Returns ``(status, iterations, cholesky_updates,
    fail_iter, rho, r_prim, r_dual, r_comp)``.
    """
    n = g.shape[0]
    rho = float(rho_init)
    p = float(p_init)
    buf = np.empty_like(GR)
    factor = _factor(GR, eta + rho, buf)
    chol_updates = 1
    record = trace.shape[0] > 0

    f_prev = np.empty(n)
    y_prev = np.empty(n)
    rhs = np.empty(n)
    rp = rd = rc = np.nan

    for k in range(1, max_iter + 1):
        np.copyto(f_prev, f)
        np.copyto(y_prev, y)

        if de_saxce:
            _desaxce_into(s, z, mu)
        else:
            s[:] = 0.0

        # f-update: linear solve against the cached factorization.
        np.copyto(rhs, g)
        rhs += s
        rhs -= eta * f_prev
        rhs -= rho * y_prev
        rhs -= z
        rhs *= -1.0
        f[:] = cho_solve(factor, rhs, overwrite_b=False, check_finite=False)

        # y-update: cone projection of f - z/rho.
        np.copyto(y, f)
        y -= z / rho
        _project_product(y, mu)

        # z-update.
        z -= rho * (f - y)

        if not (np.isfinite(f).all() and np.isfinite(z).all()):
            return STATUS_FAILURE, k, chol_updates, k, rho, np.nan, np.nan, np.nan

        rp = float(np.max(np.abs(f - y))) if n else 0.0
        rd = float(np.max(np.abs(eta * (f - f_prev) + rho * (y - y_prev)))) if n else 0.0
        rc = 0.0
        for i in range(mu.shape[0]):
            c = abs(float(f[3 * i : 3 * i + 3] @ z[3 * i : 3 * i + 3]))
            if c > rc:
                rc = c

        if record:
            trace[k - 1, 0] = k
            trace[k - 1, 1] = rp
            trace[k - 1, 2] = rd
            trace[k - 1, 3] = rc
            trace[k - 1, 4] = rho

        if rp <= eps_abs and rd <= eps_abs and rc <= eps_abs:
            return STATUS_CONVERGED, k, chol_updates, -1, rho, rp, rd, rc

        # rho update, shared alpha-tube trigger for both strategies.
        inc = rp >= alpha * rd
        dec = rd >= alpha * rp
        if inc and dec:
            pass  # both norms zero: leave rho alone
        elif spectral:
            if inc or dec:
                p = p + p_inc if inc else p - p_dec
                p = min(max(p, -P_CLAMP), P_CLAMP)
                kappa = spec_L / spec_m
                rho_new = np.sqrt(spec_m * spec_L) * kappa ** p
                if abs(rho_new - rho) > RHO_EQUAL_RTOL * rho:
                    rho = rho_new
                    factor = _factor(GR, eta + rho, buf)
                    chol_updates += 1
        else:
            if inc:
                rho_new = tau_inc * rho
            elif dec:
                rho_new = rho / tau_dec
            else:
                rho_new = rho
            if rho_new != rho:
                rho = rho_new
                factor = _factor(GR, eta + rho, buf)
                chol_updates += 1

    return STATUS_MAX_ITER, max_iter, chol_updates, -1, rho, rp, rd, rc


def pgs_solve(GR, g, mu, lam, eps_abs, max_iter, omega, inv_step, de_saxce, trace):
    """Over-relaxed projected Gauss-Seidel sweeps on the NCP.

    ``lam`` is modified in place; ``inv_step`` holds the per-contact inverse
    step size (reciprocal of the block curvature bound).  Returns
    ``(status, sweeps, fail_iter, max_violation)``.  The running contact
    velocity is maintained incrementally and refreshed periodically against
    drift.
    """
    n = g.shape[0]
    n_c = mu.shape[0]
    record = trace.shape[0] > 0

    if not np.isfinite(lam).all():
        return STATUS_FAILURE, 0, 0, np.nan

    sigma = GR @ lam + g
    block = np.empty(3)

    status = STATUS_MAX_ITER
    sweeps = 0
    viol = np.inf

    for sweep in range(0, max_iter + 1):
        viol, pmax, dmax, cmax = _pgs_violation(sigma, lam, mu, de_saxce)
        if record and sweep > 0:
            trace[sweep - 1, 0] = sweep
            trace[sweep - 1, 1] = pmax
            trace[sweep - 1, 2] = dmax
            trace[sweep - 1, 3] = cmax
            trace[sweep - 1, 4] = 0.0
        if viol <= eps_abs:
            return STATUS_CONVERGED, sweep, -1, viol
        if sweep == max_iter:
            break

        for i in range(n_c):
            b = slice(3 * i, 3 * i + 3)
            np.copyto(block, sigma[b])
            if de_saxce:
                block[2] += mu[i] * np.sqrt(block[0] ** 2 + block[1] ** 2)
            old0, old1, old2 = lam[3 * i], lam[3 * i + 1], lam[3 * i + 2]
            lam[b] -= omega * inv_step[i] * block
            _project_soc_inplace(lam[b], mu[i])
            d0 = lam[3 * i] - old0
            d1 = lam[3 * i + 1] - old1
            d2 = lam[3 * i + 2] - old2
            if d0 != 0.0 or d1 != 0.0 or d2 != 0.0:
                sigma += d0 * GR[3 * i] + d1 * GR[3 * i + 1] + d2 * GR[3 * i + 2]

        sweeps = sweep + 1
        if not np.isfinite(lam).all():
            return STATUS_FAILURE, sweeps, sweeps, np.nan
        if sweeps % 256 == 0:
            sigma = GR @ lam + g

    return status, max_iter, -1, viol


def _pgs_violation(sigma, lam, mu, de_saxce):
    # In convex mode the exact-Signorini product is not implied by the model;
    # the blockwise cone complementarity replaces it (mirrors check_ncp).
    pmax = dmax = cmax = sigmax = 0.0
    for i in range(mu.shape[0]):
        l0, l1, l2 = lam[3 * i], lam[3 * i + 1], lam[3 * i + 2]
        s0, s1, s2 = sigma[3 * i], sigma[3 * i + 1], sigma[3 * i + 2]
        w2 = s2 + mu[i] * np.sqrt(s0 * s0 + s1 * s1) if de_saxce else s2
        comp = abs(l0 * s0 + l1 * s1 + l2 * w2)
        sig = abs(l2 * s2) if de_saxce else comp
        pd = _soc_distance(l0, l1, l2, mu[i])
        dd = _soc_distance(s0, s1, w2, 1.0 / mu[i])
        sigmax = max(sigmax, sig)
        pmax = max(pmax, pd)
        dmax = max(dmax, dd)
        cmax = max(cmax, comp)
    return max(sigmax, pmax, dmax, cmax), pmax, dmax, max(cmax, sigmax)
