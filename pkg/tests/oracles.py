"""Slow, independent reference implementations used only by the tests."""

import numpy as np


def inverse_ld(A):
    """Gauss-Jordan inverse with partial pivoting in long double."""
    A = np.array(A, dtype=np.longdouble)
    n = A.shape[0]
    M = np.hstack([A, np.eye(n, dtype=np.longdouble)])
    for c in range(n):
        p = c + int(np.argmax(np.abs(M[c:, c])))
        M[[c, p]] = M[[p, c]]
        M[c] /= M[c, c]
        col = M[:, c].copy()
        col[c] = 0
        M -= np.outer(col, M[c])
    return M[:, n:]


def ridge_explicit(Phi, Y, lam):
    """Centered normal equations through an explicit inverse, in long double."""
    Phi = np.asarray(Phi, dtype=np.longdouble)
    Y = np.asarray(Y, dtype=np.longdouble)
    pm, ym = Phi.mean(0), Y.mean(0)
    Pc, Yc = Phi - pm, Y - ym
    A = Pc.T @ Pc + np.longdouble(lam) * np.eye(Phi.shape[1], dtype=np.longdouble)
    W = inverse_ld(A) @ (Pc.T @ Yc)
    return W.astype(np.float64), (ym - pm @ W).astype(np.float64)


def rk4_reference(f, x0, h, n_steps, refine=10):
    """Classic RK4 at step h/refine, sampled every ``refine`` substeps."""
    x = np.array(x0, dtype=np.float64)
    hh = h / refine
    out = [x.copy()]
    for _ in range(n_steps):
        for _ in range(refine):
            k1 = f(x)
            k2 = f(x + 0.5 * hh * k1)
            k3 = f(x + 0.5 * hh * k2)
            k4 = f(x + hh * k3)
            x = x + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x.copy())
    return np.array(out)
