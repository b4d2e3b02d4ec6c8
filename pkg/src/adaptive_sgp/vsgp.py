"""Batch variational sparse GP: collapsed bound, optimal variational
distribution, predictive posterior, and Adam-based batch training.

Used both to initialize the streaming models and as the sliding-window
baseline's inner model.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import bound, linalg
from .kernel import KernelParams, kernel_matrix
from .optim import Adam

DEFAULT_JITTER = 1e-6


@dataclass(frozen=True)
class PredictiveDist:
    """Latent-function predictive mean and variance at one query point."""

    mean: float
    var: float


def _clamp_var(v: float) -> float:
    # Tiny negative values are rounding noise; anything worse is a bug the
    # property suite is meant to catch, so only clamp near zero.
    return max(float(v), 0.0)


@dataclass(frozen=True)
class VsgpModel:
    inducing: np.ndarray          # M x D
    params: KernelParams
    log_noise: float
    q_mean: np.ndarray            # M
    q_cov: np.ndarray             # M x M
    kuu_inv: np.ndarray           # inverse of jittered Kuu
    jitter: float = DEFAULT_JITTER


def collapsed_bound(X, y, U, params: KernelParams, log_noise: float,
                    jitter: float = DEFAULT_JITTER) -> float:
    """Collapsed variational lower bound on the log marginal likelihood."""
    y = np.asarray(y, dtype=float).ravel()
    return bound.weighted_bound(X, y, U, params, log_noise,
                                np.ones(y.shape[0]), jitter)


def optimal_q(X, y, U, params: KernelParams, log_noise: float,
              jitter: float = DEFAULT_JITTER):
    """Closed-form optimal variational mean and covariance.

    mu = sigma^-2 Kuu B Kux y,  A = Kuu B Kuu,
    with B = (Kuu + sigma^-2 Kux Kxu)^-1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    y = np.asarray(y, dtype=float).ravel()
    sig2 = float(np.exp(log_noise))

    Kuu = kernel_matrix(U, U, params) + jitter * np.eye(U.shape[0])
    Kxu = kernel_matrix(X, U, params)
    f_b = linalg.cholesky_psd(Kuu + Kxu.T @ Kxu / sig2, 0.0)
    BKuxy = linalg.solve_psd(f_b, Kxu.T @ y)
    BKuu = linalg.solve_psd(f_b, Kuu)
    mu = Kuu @ BKuxy / sig2
    A = Kuu @ BKuu
    A = 0.5 * (A + A.T)
    return mu, A


def predict(model: VsgpModel, xstar) -> PredictiveDist:
    """Predictive mean/variance at a single query input (O(M^2))."""
    xstar = np.atleast_2d(np.asarray(xstar, dtype=float))
    ks = kernel_matrix(xstar, model.inducing, model.params).ravel()
    kss = model.params.variance
    a = model.kuu_inv @ ks
    mean = float(a @ model.q_mean)
    var = kss - float(ks @ a) + float(a @ model.q_cov @ a)
    return PredictiveDist(mean=mean, var=_clamp_var(var))


def bound_gradients(X, y, U, params: KernelParams, log_noise: float,
                    jitter: float = DEFAULT_JITTER) -> np.ndarray:
    """Gradient of the collapsed bound, flattened as
    [U entries row-major, log_variance, log_lengthscale, log_noise]."""
    y = np.asarray(y, dtype=float).ravel()
    g = bound.weighted_bound_gradients(X, y, U, params, log_noise,
                                       np.ones(y.shape[0]), jitter)
    return np.concatenate([
        g["inducing"].ravel(),
        [g["log_variance"], g["log_lengthscale"], g["log_noise"]],
    ])


def init_hyperparams(X, y) -> tuple[KernelParams, float]:
    """Deterministic data-dependent starting point for batch training."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    y_var = max(float(np.var(y)), 1e-6)
    scale = float(np.mean(np.std(X, axis=0))) or 1.0
    params = KernelParams(log_variance=float(np.log(y_var)),
                          log_lengthscale=float(np.log(scale)))
    log_noise = float(np.log(0.1 * y_var))
    return params, log_noise


def fit_batch(X, y, M: int, iters: int, seed: int, lr: float = 0.05,
              jitter: float = DEFAULT_JITTER) -> VsgpModel:
    """Train a batch model: subset-of-data inducing initialization followed
    by ``iters`` Adam ascent steps on the collapsed bound."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if not 1 <= M <= n:
        raise ValueError(f"need 1 <= M <= N, got M={M}, N={n}")

    rng = np.random.default_rng(seed)
    U = X[rng.choice(n, size=M, replace=False)].copy()
    params, log_noise = init_hyperparams(X, y)

    opt = Adam(lr=lr)
    for _ in range(iters):
        g = bound.weighted_bound_gradients(X, y, U, params, log_noise,
                                           np.ones(n), jitter)
        U = U + opt.step("inducing", g["inducing"])
        params = KernelParams(
            log_variance=params.log_variance + opt.step("log_variance", g["log_variance"]),
            log_lengthscale=params.log_lengthscale + opt.step("log_lengthscale", g["log_lengthscale"]),
        )
        log_noise = log_noise + opt.step("log_noise", g["log_noise"])

    mu, A = optimal_q(X, y, U, params, log_noise, jitter)
    Kuu = kernel_matrix(U, U, params) + jitter * np.eye(M)
    kuu_inv = linalg.inv_psd(Kuu, 0.0)
    return VsgpModel(inducing=U, params=params, log_noise=log_noise,
                     q_mean=mu, q_cov=A, kuu_inv=kuu_inv, jitter=jitter)


def refresh_q(model: VsgpModel, X, y) -> VsgpModel:
    """Recompute the optimal q and cached Kuu inverse after parameter moves."""
    mu, A = optimal_q(X, y, model.inducing, model.params, model.log_noise,
                      model.jitter)
    Kuu = kernel_matrix(model.inducing, model.inducing, model.params)
    Kuu += model.jitter * np.eye(model.inducing.shape[0])
    return replace(model, q_mean=mu, q_cov=A, kuu_inv=linalg.inv_psd(Kuu, 0.0))
