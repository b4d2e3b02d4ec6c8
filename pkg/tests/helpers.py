"""Shared oracles and instance builders for the test suite.

Everything here is deliberately naive (dense N x N assembly, direct
summation, central finite differences) so it can serve as an independent
check on the O(N M^2) production code paths.
"""

import numpy as np

from adaptive_sgp import adaptive, linalg
from adaptive_sgp.kernel import KernelParams, kernel_matrix


def rel(a, b):
    """Max elementwise deviation, relative to the oracle's scale."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def random_params(rng):
    return KernelParams(
        log_variance=float(rng.uniform(-0.5, 0.7)),
        log_lengthscale=float(rng.uniform(-0.5, 0.5)),
    )


def random_instance(rng, n=None, m=None, d=None):
    """A random (X, y, U, params, log_noise) tuple with benign conditioning."""
    n = n or int(rng.integers(4, 31))
    m = m or int(rng.integers(1, 9))
    d = d or int(rng.integers(1, 4))
    X = rng.normal(size=(n, d)) * 1.5
    y = rng.normal(size=n)
    U = rng.normal(size=(m, d)) * 1.5
    return X, y, U, random_params(rng), float(rng.uniform(-2.5, -0.5))


def make_state(rng, t_cur=None, k=None, d=None, lam=None, window_t=None):
    """A random internally consistent AdaptiveState (caches rebuilt)."""
    t_cur = t_cur or int(rng.integers(3, 20))
    k = k or int(rng.integers(1, 6))
    d = d or int(rng.integers(1, 3))
    lam = lam if lam is not None else float(rng.uniform(0.6, 1.0))
    X, y, U, params, ln = random_instance(rng, n=t_cur, m=k, d=d)
    st = adaptive.AdaptiveState(
        window_x=X, window_y=y, inducing=U, params=params, log_noise=ln,
        lam=lam, capacity_m=max(k + 2, 4), window_t=window_t or t_cur,
        jitter=1e-6)
    adaptive.rebuild_caches(st)
    return st


def dense_weighted_bound(X, y, U, params, log_noise, w, jitter=1e-6):
    """Literal N x N assembly of the forgetting-factor bound."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    n = y.shape[0]
    sig2 = np.exp(log_noise)
    Kuu = kernel_matrix(U, U, params) + jitter * np.eye(U.shape[0])
    Kxu = kernel_matrix(X, U, params)
    Qff = Kxu @ np.linalg.solve(Kuu, Kxu.T)
    cov = np.diag(sig2 / w) + Qff
    sign, ld = np.linalg.slogdet(cov)
    assert sign > 0
    quad = y @ np.linalg.solve(cov, y)
    gauss = -0.5 * (n * np.log(2 * np.pi) + ld + quad)
    middle = -0.5 * np.sum(w - 1.0) * np.log(2 * np.pi * sig2)
    kdiag = params.variance * np.ones(n)
    trace = -0.5 / sig2 * float(np.dot(w, kdiag - np.diag(Qff)))
    return gauss + middle + trace


def dense_gp_lml(X, y, params, log_noise):
    """Exact O(N^3) Gaussian-process log marginal likelihood."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    K = kernel_matrix(X, X, params) + np.exp(log_noise) * np.eye(n)
    sign, ld = np.linalg.slogdet(K)
    quad = y @ np.linalg.solve(K, y)
    return -0.5 * (n * np.log(2 * np.pi) + ld + quad)


def fd_gradient(f, x0, h=1e-5):
    """Central finite differences of a scalar function of a flat vector."""
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        step = h * max(1.0, abs(x0[i]))
        xp = x0.copy(); xp[i] += step
        xm = x0.copy(); xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2 * step)
    return g


def grad_close(analytic, numeric, tol=1e-4):
    """Relative agreement with a floor so near-zero entries do not blow up."""
    analytic = np.asarray(analytic, dtype=float).ravel()
    numeric = np.asarray(numeric, dtype=float).ravel()
    scale = max(1e-6, float(np.max(np.abs(numeric))))
    return float(np.max(np.abs(analytic - numeric))) / scale < tol


def spd_matrix(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)
