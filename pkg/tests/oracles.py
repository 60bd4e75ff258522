"""Independent reference implementations used to pin expected values.

Everything here is deliberately naive (loops, grids, golden-section) and
written without importing the package's numerical code paths, so tests can
compare the two routes.
"""

import numpy as np


def naive_matmul(A, B):
    """Triple-loop matrix product."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    m, k = A.shape
    k2, n = B.shape
    assert k == k2
    C = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += A[i, t] * B[t, j]
            C[i, j] = acc
    return C


def phi_direct(a, t):
    return ((a - 1) * t * t + 2 * t) / (a + 1)


def grid_conjugate(a, s, points=100000):
    """max_{t in [0,1]} s*t - phi(t) on a dense grid."""
    ts = np.linspace(0.0, 1.0, points)
    return float(np.max(s * ts - phi_direct(a, ts)))


def golden_min(f, lo, hi, iters=200):
    """Golden-section search for the minimizer of a unimodal f on [lo, hi]."""
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def prox_radial_oracle(objective, hi, coarse=2000):
    """Global minimizer of a 1-D objective on [0, hi]: grid + golden refine."""
    ss = np.linspace(0.0, hi, coarse)
    vals = np.array([objective(s) for s in ss])
    i = int(np.argmin(vals))
    lo = ss[max(i - 1, 0)]
    up = ss[min(i + 1, coarse - 1)]
    return golden_min(objective, lo, up)


def fd_gradient(f, X, step=1e-5):
    """Central finite differences of a scalar function of a matrix."""
    X = np.asarray(X, dtype=float)
    G = np.zeros_like(X)
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            Xp = X.copy()
            Xm = X.copy()
            Xp[i, j] += step
            Xm[i, j] -= step
            G[i, j] = (f(Xp) - f(Xm)) / (2 * step)
    return G


def l20_bruteforce(X, a=3.0, grid=11):
    """Column count via grid minimization of the variational form.

    min sum_j phi(w_j) over w in [0,1]^kappa subject to
    sum_j (1 - w_j) ||X_j|| = 0, with phi increasing, phi(0)=0, phi(1)=1.
    The constraint forces w_j = 1 exactly on nonzero columns, so the optimum
    equals the number of nonzero columns.
    """
    import itertools

    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=0)
    ws = np.linspace(0.0, 1.0, grid)
    best = None
    for combo in itertools.product(ws, repeat=X.shape[1]):
        w = np.array(combo)
        if abs(float((1.0 - w) @ norms)) > 1e-12:
            continue
        val = float(np.sum(phi_direct(a, w)))
        if best is None or val < best:
            best = val
    assert best is not None
    return int(round(best))
