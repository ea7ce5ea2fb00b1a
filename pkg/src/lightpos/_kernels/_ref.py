"""Pure-numpy reference implementation of the position solver kernel.

Behaviorally identical to the compiled extension in ``_core.pyx``; keep
the two in sync.
"""

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1


def _profile(kind, coeffs, c):
    """Emission profile and its derivative as functions of c = cos(omega)."""
    c = np.clip(c, 1e-12, 1.0)
    if kind == 0:
        gamma = coeffs[0]
        g = c ** gamma
        dg = gamma * c ** (gamma - 1.0)
        return g, dg
    w = np.arccos(c)
    g = np.zeros_like(c)
    dgdw = np.zeros_like(c)
    for j in range(len(coeffs) - 1, 0, -1):
        g = g * w + coeffs[j]
        dgdw = dgdw * w + j * coeffs[j]
    g = g * w + coeffs[0]
    s = np.sqrt(np.maximum(1.0 - c * c, 1e-18))
    return g, -dgdw / s


def _model(planes, k, kind, coeffs, x):
    """Model values and gradient wrt (x, y, z) at position x."""
    d = np.linalg.norm(x)
    c = x[2] / d
    p = planes @ x
    g, dg = _profile(kind, coeffs, np.atleast_1d(c))
    g, dg = g[0], dg[0]
    d3 = d ** 3
    m = k * p * g / d3
    e3 = np.array([0.0, 0.0, 1.0])
    dc_dx = e3 / d - x[2] * x / d3
    grad = k * (
        planes * (g / d3)
        + np.outer(p, dc_dx) * (dg / d3)
        - np.outer(p * g * 3.0 / d3 / d**2, x)
    )
    return m, grad


def solve_single(planes, s, k, kind, coeffs, x0, y0, z0,
                 max_iter=100, lam0=1e-3, step_tol=1e-10, ftol=1e-8):
    """Damped Gauss-Newton solve of the single-lamp position problem.

    Minimizes sum(((m_i(X) - s_i) / s_i)^2) over X in the solve frame,
    with z > 0 enforced by iterating over log z.  Stops on a small step
    or a relative cost reduction below ftol.  Returns
    (x, y, z, residual_rms, status, iterations).
    """
    planes = np.ascontiguousarray(planes, dtype=float)
    s = np.asarray(s, dtype=float)
    n = len(s)
    theta = np.array([x0, y0, np.log(z0)])

    def cost(th):
        x = np.array([th[0], th[1], np.exp(th[2])])
        m, _ = _model(planes, k, kind, coeffs, x)
        r = (m - s) / s
        return r, float(r @ r)

    r, f = cost(theta)
    lam = lam0
    status = STATUS_MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        x = np.array([theta[0], theta[1], np.exp(theta[2])])
        m, grad = _model(planes, k, kind, coeffs, x)
        jac = grad / s[:, None]
        jac[:, 2] *= x[2]  # d/d(log z)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        try:
            step = np.linalg.solve(jtj + lam * np.eye(3), -jtr)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        trial = theta + step
        r_t, f_t = cost(trial)
        if f_t < f:
            improved = f - f_t
            theta, r, f = trial, r_t, f_t
            lam = max(lam * 0.1, 1e-15)
            if (np.linalg.norm(step) < step_tol
                    or improved <= ftol * max(f, 1e-300)):
                status = STATUS_CONVERGED
                break
        else:
            lam *= 10.0
            if lam > 1e14:
                if np.linalg.norm(step) < step_tol:
                    status = STATUS_CONVERGED
                break
    x, y, z = theta[0], theta[1], np.exp(theta[2])
    rms = float(np.sqrt(f / n))
    return x, y, z, rms, status, it
