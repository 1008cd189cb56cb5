# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver hot loops: the proximal-ADMM iteration and PGS sweeps.

Semantics mirror ``_pykernels`` exactly; the drivers in ``admm.py`` and
``pgs.py`` pick whichever backend is active.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, pow, sqrt
from libc.string cimport memcpy
from scipy.linalg.cython_lapack cimport dpotrf, dpotrs

cnp.import_array()

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_FAILURE = 2

cdef double P_CLAMP = 2.0
cdef double RHO_EQUAL_RTOL = 1e-15


cdef inline void _project_soc(double* x, double mu) noexcept nogil:
    cdef double nt = sqrt(x[0] * x[0] + x[1] * x[1])
    cdef double yn, scale
    if nt <= mu * x[2]:
        return
    if mu * nt <= -x[2]:
        x[0] = 0.0
        x[1] = 0.0
        x[2] = 0.0
        return
    yn = (mu * nt + x[2]) / (mu * mu + 1.0)
    scale = mu * yn / nt
    x[0] *= scale
    x[1] *= scale
    x[2] = yn


cdef inline double _soc_distance(double x0, double x1, double x2, double mu) noexcept nogil:
    cdef double nt = sqrt(x0 * x0 + x1 * x1)
    cdef double yn, scale, d0, d1, d2
    if nt <= mu * x2:
        return 0.0
    if mu * nt <= -x2:
        return sqrt(nt * nt + x2 * x2)
    yn = (mu * nt + x2) / (mu * mu + 1.0)
    scale = mu * yn / nt if nt > 0.0 else 0.0
    d0 = x0 - scale * x0
    d1 = x1 - scale * x1
    d2 = x2 - yn
    return sqrt(d0 * d0 + d1 * d1 + d2 * d2)


cdef int _factor(const double[:, ::1] GR, double shift, double[:, ::1] buf) noexcept nogil:
    """Cholesky of GR + shift*Id into buf.  Returns the LAPACK info code."""
    cdef int n = GR.shape[0]
    cdef int info = 0
    cdef int i
    memcpy(&buf[0, 0], &GR[0, 0], n * n * sizeof(double))
    for i in range(n):
        buf[i, i] += shift
    # The C-ordered symmetric buffer reads as Fortran-order transposed, which
    # is the same matrix; uplo='L' then refers to the C-order upper triangle.
    dpotrf("L", &n, &buf[0, 0], &n, &info)
    return info


cdef int _chol_solve(double[:, ::1] fac, double* rhs, int n) noexcept nogil:
    cdef int info = 0
    cdef int nrhs = 1
    dpotrs("L", &n, &nrhs, &fac[0, 0], &n, rhs, &n, &info)
    return info


def admm_solve(const double[:, ::1] GR, const double[::1] g, const double[::1] mu,
               double[::1] f, double[::1] y, double[::1] z, double[::1] s,
               double eta, double rho_init, double eps_abs, int max_iter,
               bint spectral, double tau_inc, double tau_dec,
               double p_inc, double p_dec, double p_init,
               double spec_m, double spec_L, double alpha, bint de_saxce,
               double[:, ::1] trace):
    """Compiled proximal-ADMM loop; see ``_pykernels.admm_solve``."""
    cdef int n = g.shape[0]
    cdef int n_c = mu.shape[0]
    cdef double rho = rho_init
    cdef double p = p_init
    cdef double rp = np.nan, rd = np.nan, rc = np.nan
    cdef int chol_updates = 0
    cdef int k, i, j, info
    cdef bint record = trace.shape[0] > 0
    cdef bint inc, dec, finite
    cdef double v, c, rho_new, kappa

    buf_arr = np.empty((n, n), dtype=np.float64)
    fprev_arr = np.empty(n, dtype=np.float64)
    yprev_arr = np.empty(n, dtype=np.float64)
    rhs_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] buf = buf_arr
    cdef double[::1] f_prev = fprev_arr
    cdef double[::1] y_prev = yprev_arr
    cdef double[::1] rhs = rhs_arr

    info = _factor(GR, eta + rho, buf)
    if info != 0:
        return STATUS_FAILURE, 0, 1, 0, rho, np.nan, np.nan, np.nan
    chol_updates = 1

    with nogil:
        for k in range(1, max_iter + 1):
            memcpy(&f_prev[0], &f[0], n * sizeof(double))
            memcpy(&y_prev[0], &y[0], n * sizeof(double))

            if de_saxce:
                for i in range(n_c):
                    s[3 * i] = 0.0
                    s[3 * i + 1] = 0.0
                    s[3 * i + 2] = mu[i] * sqrt(z[3 * i] * z[3 * i]
                                                + z[3 * i + 1] * z[3 * i + 1])
            else:
                for i in range(n):
                    s[i] = 0.0

            for i in range(n):
                rhs[i] = -(g[i] + s[i] - eta * f_prev[i] - rho * y_prev[i] - z[i])
            info = _chol_solve(buf, &rhs[0], n)
            if info != 0:
                break
            memcpy(&f[0], &rhs[0], n * sizeof(double))

            for i in range(n):
                y[i] = f[i] - z[i] / rho
            for i in range(n_c):
                _project_soc(&y[3 * i], mu[i])

            for i in range(n):
                z[i] -= rho * (f[i] - y[i])

            finite = True
            for i in range(n):
                if not (isfinite(f[i]) and isfinite(z[i])):
                    finite = False
                    break
            if not finite:
                with gil:
                    return STATUS_FAILURE, k, chol_updates, k, rho, np.nan, np.nan, np.nan

            rp = 0.0
            rd = 0.0
            rc = 0.0
            for i in range(n):
                v = fabs(f[i] - y[i])
                if v > rp:
                    rp = v
                v = fabs(eta * (f[i] - f_prev[i]) + rho * (y[i] - y_prev[i]))
                if v > rd:
                    rd = v
            for i in range(n_c):
                c = fabs(f[3 * i] * z[3 * i] + f[3 * i + 1] * z[3 * i + 1]
                         + f[3 * i + 2] * z[3 * i + 2])
                if c > rc:
                    rc = c

            if record:
                trace[k - 1, 0] = k
                trace[k - 1, 1] = rp
                trace[k - 1, 2] = rd
                trace[k - 1, 3] = rc
                trace[k - 1, 4] = rho

            if rp <= eps_abs and rd <= eps_abs and rc <= eps_abs:
                with gil:
                    return STATUS_CONVERGED, k, chol_updates, -1, rho, rp, rd, rc

            inc = rp >= alpha * rd
            dec = rd >= alpha * rp
            if inc and dec:
                pass
            elif spectral:
                if inc or dec:
                    p = p + p_inc if inc else p - p_dec
                    if p > P_CLAMP:
                        p = P_CLAMP
                    elif p < -P_CLAMP:
                        p = -P_CLAMP
                    kappa = spec_L / spec_m
                    rho_new = sqrt(spec_m * spec_L) * pow(kappa, p)
                    if fabs(rho_new - rho) > RHO_EQUAL_RTOL * rho:
                        rho = rho_new
                        info = _factor(GR, eta + rho, buf)
                        if info != 0:
                            break
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
                    info = _factor(GR, eta + rho, buf)
                    if info != 0:
                        break
                    chol_updates += 1

    if info != 0:
        return STATUS_FAILURE, k, chol_updates, k, rho, np.nan, np.nan, np.nan
    return STATUS_MAX_ITER, max_iter, chol_updates, -1, rho, rp, rd, rc


cdef void _pgs_violation(const double[::1] sigma, const double[::1] lam, const double[::1] mu,
                         bint de_saxce, double* out) noexcept nogil:
    cdef double pmax = 0.0, dmax = 0.0, cmax = 0.0, sigmax = 0.0
    cdef double l0, l1, l2, s0, s1, s2, w2, sig, comp, pd, dd
    cdef int i
    for i in range(mu.shape[0]):
        l0 = lam[3 * i]
        l1 = lam[3 * i + 1]
        l2 = lam[3 * i + 2]
        s0 = sigma[3 * i]
        s1 = sigma[3 * i + 1]
        s2 = sigma[3 * i + 2]
        # convex mode: blockwise cone complementarity replaces the
        # exact-Signorini product (mirrors check_ncp)
        w2 = s2 + mu[i] * sqrt(s0 * s0 + s1 * s1) if de_saxce else s2
        comp = fabs(l0 * s0 + l1 * s1 + l2 * w2)
        sig = fabs(l2 * s2) if de_saxce else comp
        pd = _soc_distance(l0, l1, l2, mu[i])
        dd = _soc_distance(s0, s1, w2, 1.0 / mu[i])
        if sig > sigmax:
            sigmax = sig
        if pd > pmax:
            pmax = pd
        if dd > dmax:
            dmax = dd
        if comp > cmax:
            cmax = comp
    if cmax < sigmax:
        cmax = sigmax
    out[0] = sigmax if sigmax > pmax else pmax
    if dmax > out[0]:
        out[0] = dmax
    if cmax > out[0]:
        out[0] = cmax
    out[1] = pmax
    out[2] = dmax
    out[3] = cmax


def pgs_solve(const double[:, ::1] GR, const double[::1] g, const double[::1] mu, double[::1] lam,
              double eps_abs, int max_iter, double omega, const double[::1] inv_step,
              bint de_saxce, double[:, ::1] trace):
    """Compiled PGS sweep loop; see ``_pykernels.pgs_solve``."""
    cdef int n = g.shape[0]
    cdef int n_c = mu.shape[0]
    cdef bint record = trace.shape[0] > 0
    cdef int sweep, i, j, sweeps
    cdef double b0, b1, b2, old0, old1, old2, d0, d1, d2, dval
    cdef double viol = np.inf
    cdef double stats[4]
    cdef bint finite

    if not np.isfinite(np.asarray(lam)).all():
        return STATUS_FAILURE, 0, 0, np.nan
    sigma_arr = np.asarray(GR) @ np.asarray(lam) + np.asarray(g)
    cdef double[::1] sigma = sigma_arr

    with nogil:
        for sweep in range(0, max_iter + 1):
            _pgs_violation(sigma, lam, mu, de_saxce, stats)
            viol = stats[0]
            if record and sweep > 0:
                trace[sweep - 1, 0] = sweep
                trace[sweep - 1, 1] = stats[1]
                trace[sweep - 1, 2] = stats[2]
                trace[sweep - 1, 3] = stats[3]
                trace[sweep - 1, 4] = 0.0
            if viol <= eps_abs:
                with gil:
                    return STATUS_CONVERGED, sweep, -1, viol
            if sweep == max_iter:
                break

            for i in range(n_c):
                b0 = sigma[3 * i]
                b1 = sigma[3 * i + 1]
                b2 = sigma[3 * i + 2]
                if de_saxce:
                    b2 += mu[i] * sqrt(b0 * b0 + b1 * b1)
                old0 = lam[3 * i]
                old1 = lam[3 * i + 1]
                old2 = lam[3 * i + 2]
                lam[3 * i] = old0 - omega * inv_step[i] * b0
                lam[3 * i + 1] = old1 - omega * inv_step[i] * b1
                lam[3 * i + 2] = old2 - omega * inv_step[i] * b2
                _project_soc(&lam[3 * i], mu[i])
                d0 = lam[3 * i] - old0
                d1 = lam[3 * i + 1] - old1
                d2 = lam[3 * i + 2] - old2
                if d0 != 0.0 or d1 != 0.0 or d2 != 0.0:
                    for j in range(n):
                        sigma[j] += d0 * GR[3 * i, j] + d1 * GR[3 * i + 1, j] \
                            + d2 * GR[3 * i + 2, j]

            sweeps = sweep + 1
            finite = True
            for j in range(n):
                if not isfinite(lam[j]):
                    finite = False
                    break
            if not finite:
                with gil:
                    return STATUS_FAILURE, sweeps, sweeps, np.nan
            if sweeps % 256 == 0:
                for j in range(n):
                    dval = g[j]
                    for i in range(n):
                        dval += GR[j, i] * lam[i]
                    sigma[j] = dval

    return STATUS_MAX_ITER, max_iter, -1, viol
