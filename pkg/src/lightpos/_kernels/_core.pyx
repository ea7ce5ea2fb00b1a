# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the position solver kernel.

Behaviorally identical to the numpy reference in ``_ref.py``; keep the
two in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport acos, exp, fabs, log, pow, sqrt

cnp.import_array()

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1

DEF MAX_READINGS = 32
DEF MAX_COEFFS = 16


cdef inline void _profile(int kind, const double* coeffs, int ncoef,
                          double c, double* g, double* dg) nogil:
    cdef double w, acc, dacc, s
    cdef int j
    if c < 1e-12:
        c = 1e-12
    elif c > 1.0:
        c = 1.0
    if kind == 0:
        g[0] = pow(c, coeffs[0])
        dg[0] = coeffs[0] * pow(c, coeffs[0] - 1.0)
        return
    w = acos(c)
    acc = 0.0
    dacc = 0.0
    for j in range(ncoef - 1, 0, -1):
        acc = acc * w + coeffs[j]
        dacc = dacc * w + j * coeffs[j]
    acc = acc * w + coeffs[0]
    s = 1.0 - c * c
    if s < 1e-18:
        s = 1e-18
    g[0] = acc
    dg[0] = -dacc / sqrt(s)


cdef inline double _residuals(const double* pl, const double* s, int n,
                              double k, int kind, const double* coeffs,
                              int ncoef, double x, double y, double z,
                              double* r) nogil:
    cdef double d, c, g, dg, p, m, f
    cdef int i
    d = sqrt(x * x + y * y + z * z)
    c = z / d
    _profile(kind, coeffs, ncoef, c, &g, &dg)
    f = 0.0
    for i in range(n):
        p = pl[3 * i] * x + pl[3 * i + 1] * y + pl[3 * i + 2] * z
        m = k * p * g / (d * d * d)
        r[i] = (m - s[i]) / s[i]
        f += r[i] * r[i]
    return f


cdef inline bint _solve3(double* a, double* b, double* out) nogil:
    # Gaussian elimination with partial pivoting on a 3x3 system.
    cdef int i, j, p, col
    cdef double piv, factor, tmp
    for col in range(3):
        p = col
        for i in range(col + 1, 3):
            if fabs(a[3 * i + col]) > fabs(a[3 * p + col]):
                p = i
        if fabs(a[3 * p + col]) < 1e-300:
            return False
        if p != col:
            for j in range(3):
                tmp = a[3 * col + j]
                a[3 * col + j] = a[3 * p + j]
                a[3 * p + j] = tmp
            tmp = b[col]
            b[col] = b[p]
            b[p] = tmp
        piv = a[3 * col + col]
        for i in range(col + 1, 3):
            factor = a[3 * i + col] / piv
            for j in range(col, 3):
                a[3 * i + j] -= factor * a[3 * col + j]
            b[i] -= factor * b[col]
    for i in range(2, -1, -1):
        tmp = b[i]
        for j in range(i + 1, 3):
            tmp -= a[3 * i + j] * out[j]
        out[i] = tmp / a[3 * i + i]
    return True


def solve_single(planes, s, double k, int kind, coeffs,
                 double x0, double y0, double z0,
                 int max_iter=100, double lam0=1e-3, double step_tol=1e-10,
                 double ftol=1e-8):
    """Damped Gauss-Newton solve of the single-lamp position problem.

    Minimizes sum(((m_i(X) - s_i) / s_i)^2) over X in the solve frame,
    with z > 0 enforced by iterating over log z.  Stops on a small step
    or a relative cost reduction below ftol.  Returns
    (x, y, z, residual_rms, status, iterations).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pl = \
        np.ascontiguousarray(planes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] sv = \
        np.ascontiguousarray(s, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] cf = \
        np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef int n = sv.shape[0]
    cdef int ncoef = cf.shape[0]
    if n > MAX_READINGS or ncoef > MAX_COEFFS:
        raise ValueError("too many readings or profile coefficients")

    cdef double r[MAX_READINGS]
    cdef double rt[MAX_READINGS]
    cdef double jac[MAX_READINGS][3]
    cdef double jtj[9]
    cdef double jtr[3]
    cdef double a[9]
    cdef double b[3]
    cdef double step[3]
    cdef double theta[3]
    cdef double trial[3]
    cdef double f, f_t, lam, x, y, z, d, c, g, dg, p, d3, d5, improved, floor
    cdef double gx, gy, gz, dcx, dcy, dcz, snorm
    cdef int it = 0, i, jj, kk, status

    theta[0] = x0
    theta[1] = y0
    theta[2] = log(z0)
    f = _residuals(&pl[0, 0], &sv[0], n, k, kind, &cf[0], ncoef,
                   theta[0], theta[1], exp(theta[2]), r)
    lam = lam0
    status = STATUS_MAX_ITER

    for it in range(1, max_iter + 1):
        x = theta[0]
        y = theta[1]
        z = exp(theta[2])
        d = sqrt(x * x + y * y + z * z)
        c = z / d
        _profile(kind, &cf[0], ncoef, c, &g, &dg)
        d3 = d * d * d
        d5 = d3 * d * d
        dcx = -z * x / d3
        dcy = -z * y / d3
        dcz = 1.0 / d - z * z / d3
        for i in range(n):
            p = pl[i, 0] * x + pl[i, 1] * y + pl[i, 2] * z
            gx = k * (pl[i, 0] * g / d3 + p * dg * dcx / d3 - 3.0 * p * g * x / d5)
            gy = k * (pl[i, 1] * g / d3 + p * dg * dcy / d3 - 3.0 * p * g * y / d5)
            gz = k * (pl[i, 2] * g / d3 + p * dg * dcz / d3 - 3.0 * p * g * z / d5)
            jac[i][0] = gx / sv[i]
            jac[i][1] = gy / sv[i]
            jac[i][2] = gz * z / sv[i]  # d/d(log z)
        for jj in range(3):
            jtr[jj] = 0.0
            for kk in range(3):
                jtj[3 * jj + kk] = 0.0
        for i in range(n):
            for jj in range(3):
                jtr[jj] += jac[i][jj] * r[i]
                for kk in range(3):
                    jtj[3 * jj + kk] += jac[i][jj] * jac[i][kk]
        for jj in range(9):
            a[jj] = jtj[jj]
        a[0] += lam
        a[4] += lam
        a[8] += lam
        for jj in range(3):
            b[jj] = -jtr[jj]
        if not _solve3(a, b, step):
            lam *= 10.0
            continue
        for jj in range(3):
            trial[jj] = theta[jj] + step[jj]
        f_t = _residuals(&pl[0, 0], &sv[0], n, k, kind, &cf[0], ncoef,
                         trial[0], trial[1], exp(trial[2]), rt)
        snorm = sqrt(step[0] * step[0] + step[1] * step[1] + step[2] * step[2])
        if f_t < f:
            improved = f - f_t
            for jj in range(3):
                theta[jj] = trial[jj]
            for i in range(n):
                r[i] = rt[i]
            f = f_t
            lam *= 0.1
            if lam < 1e-15:
                lam = 1e-15
            floor = f if f > 1e-300 else 1e-300
            if snorm < step_tol or improved <= ftol * floor:
                status = STATUS_CONVERGED
                break
        else:
            lam *= 10.0
            if lam > 1e14:
                if snorm < step_tol:
                    status = STATUS_CONVERGED
                break

    return (theta[0], theta[1], exp(theta[2]),
            sqrt(f / n), status, it)
