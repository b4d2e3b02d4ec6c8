"""Variationally explicit streaming baseline: the forgetting-weighted ELBO
with a free-form Gaussian q(f_u), optimized for several Adam iterations per
incoming sample over q, all inducing points, kernel, and noise.

The per-sample likelihood expectations are Gaussian and therefore evaluated
in closed form; no sampling is involved.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .adaptive import AdaptiveState, rebuild_caches
from .bound import _chain_to_params
from .errors import NotPsd
from .kernel import KernelParams, kernel_matrix
from .optim import Adam
from .vsgp import PredictiveDist, _clamp_var

log = logging.getLogger(__name__)


@dataclass
class VariationalQ:
    """Free-form Gaussian over the inducing outputs, covariance kept as its
    lower Cholesky factor so it stays PSD under unconstrained updates."""

    mean: np.ndarray        # k
    cov_chol: np.ndarray    # k x k lower triangular, positive diagonal

    @property
    def cov(self) -> np.ndarray:
        return self.cov_chol @ self.cov_chol.T


def q_from_moments(mean: np.ndarray, cov: np.ndarray,
                   jitter: float = 1e-10) -> VariationalQ:
    f = linalg.cholesky_psd(cov, jitter)
    return VariationalQ(mean=np.asarray(mean, dtype=float).copy(), cov_chol=f.lower)


def _setup(window_x, window_y, inducing, params, log_noise, lam, jitter):
    from .adaptive import lambda_weights

    X = np.asarray(window_x, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(window_y, dtype=float).ravel()
    U = np.asarray(inducing, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    w = lambda_weights(y.shape[0], lam)
    sig2 = float(np.exp(log_noise))
    Kuu = kernel_matrix(U, U, params) + jitter * np.eye(U.shape[0])
    Kxu = kernel_matrix(X, U, params)
    Q = linalg.inv_psd(Kuu, 0.0)
    return X, y, U, w, sig2, Kuu, Kxu, Q


def elbo_lambda(window_x, window_y, inducing, params: KernelParams,
                log_noise: float, q: VariationalQ, lam: float,
                jitter: float = 1e-6) -> float:
    """Forgetting-weighted ELBO: weighted expected log-likelihood terms
    (closed form) minus the unweighted KL(q || p(f_u))."""
    X, y, U, w, sig2, Kuu, Kxu, Q = _setup(window_x, window_y, inducing,
                                           params, log_noise, lam, jitter)
    k = U.shape[0]
    A = q.cov
    Amat = Kxu @ Q                       # rows a_i = Kuu^-1 k_i
    e = y - Amat @ q.mean
    u_quad = np.einsum("ij,ij->i", Amat @ A, Amat)
    q_ii = np.einsum("ij,ij->i", Kxu, Amat)
    k_ii = params.variance

    lik = float(np.sum(w * (
        -0.5 * np.log(2.0 * np.pi * sig2)
        - e**2 / (2.0 * sig2)
        - u_quad / (2.0 * sig2)
        - (k_ii - q_ii) / (2.0 * sig2)
    )))

    logdet_A = 2.0 * float(np.sum(np.log(np.diag(q.cov_chol))))
    logdet_K = linalg.logdet(linalg.cholesky_psd(Kuu, 0.0))
    g = Q @ q.mean
    kl = 0.5 * (float(np.sum(Q * A)) + float(q.mean @ g) - k
                + logdet_K - logdet_A)
    return lik - kl


def elbo_gradients(window_x, window_y, inducing, params: KernelParams,
                   log_noise: float, q: VariationalQ, lam: float,
                   jitter: float = 1e-6) -> dict:
    """Analytic gradient of :func:`elbo_lambda` w.r.t. every free parameter.

    The ``q_chol`` entry is expressed in the optimization parametrization:
    strict lower triangle as-is, diagonal in log-space.
    """
    X, y, U, w, sig2, Kuu, Kxu, Q = _setup(window_x, window_y, inducing,
                                           params, log_noise, lam, jitter)
    Kuu_raw = Kuu - jitter * np.eye(U.shape[0])
    A = q.cov
    L = q.cov_chol
    Amat = Kxu @ Q
    e = y - Amat @ q.mean
    we = w * e
    u_quad = np.einsum("ij,ij->i", Amat @ A, Amat)
    q_ii = np.einsum("ij,ij->i", Kxu, Amat)
    k_ii = params.variance

    g = Q @ q.mean
    g_mean = Amat.T @ we / sig2 - g

    # dF/dA (symmetric), excluding the logdet A part which is taken directly
    # in the Cholesky parametrization.
    G_A = -Amat.T @ (w[:, None] * Amat) / (2.0 * sig2) - 0.5 * Q
    g_chol = 2.0 * G_A @ L
    g_chol += np.diag(1.0 / np.diag(L))          # d(0.5 logdet A)/dL
    g_chol = np.tril(g_chol)
    # log-space diagonal: chain through L_jj = exp(rho_jj)
    diag = np.diag(g_chol) * np.diag(L)
    g_chol[np.diag_indices_from(g_chol)] = diag

    g_ln = float(np.sum(w * (-0.5 + (e**2 + u_quad + (k_ii - q_ii)) / (2.0 * sig2))))

    s_e = Kxu.T @ we
    S_k = Kxu.T @ (w[:, None] * Kxu)
    QSkQ = Q @ S_k @ Q
    QAQ = Q @ A @ Q
    WKxu = w[:, None] * Kxu

    G_uu = (
        -np.outer(g, Q @ s_e) / sig2
        + QAQ @ S_k @ Q / sig2
        - 0.5 * QSkQ / sig2
        + 0.5 * (QAQ + np.outer(g, g) - Q)
    )
    G_xu = (
        np.outer(we, g) / sig2
        - WKxu @ QAQ / sig2
        + WKxu @ Q / sig2
    )

    g_lv, g_ll, gU = _chain_to_params(G_uu, G_xu, X, U, Kuu_raw, Kxu, params)
    g_lv += -params.variance * float(np.sum(w)) / (2.0 * sig2)

    return {
        "q_mean": g_mean,
        "q_chol": g_chol,
        "inducing": gU,
        "log_variance": float(g_lv),
        "log_lengthscale": float(g_ll),
        "log_noise": g_ln,
    }


def vsi_predict(state: AdaptiveState, q: VariationalQ, xstar) -> PredictiveDist:
    """Predictive distribution using the explicit q (batch-posterior form)."""
    xstar = np.atleast_2d(np.asarray(xstar, dtype=float))
    ks = kernel_matrix(xstar, state.inducing, state.params).ravel()
    a = state.kuu_inv @ ks
    mean = float(a @ q.mean)
    var = state.params.variance - float(ks @ a) + float(a @ q.cov @ a)
    return PredictiveDist(mean=mean, var=_clamp_var(var))


def _apply_chol_update(L: np.ndarray, upd: np.ndarray) -> np.ndarray:
    out = L + np.tril(upd, -1)
    out[np.diag_indices_from(out)] = np.diag(L) * np.exp(np.diag(upd))
    return np.tril(out)


def agp_vsi_step(state: AdaptiveState, q: VariationalQ, opt: Adam,
                 x_new, y_new: float, inner_iters: int = 50):
    """One prequential step: predict with the current q, slide the window,
    then run ``inner_iters`` Adam ascent iterations on the weighted ELBO
    jointly over q, all inducing points, kernel, and noise."""
    pred = vsi_predict(state, q, x_new)

    x_row = np.atleast_2d(np.asarray(x_new, dtype=float))
    state.window_x = np.vstack([state.window_x, x_row])
    state.window_y = np.append(state.window_y, float(y_new))
    if state.window_y.shape[0] > state.window_t:
        state.window_x = state.window_x[1:]
        state.window_y = state.window_y[1:]

    for _ in range(inner_iters):
        try:
            grads = elbo_gradients(state.window_x, state.window_y,
                                   state.inducing, state.params,
                                   state.log_noise, q, state.lam, state.jitter)
        except NotPsd:
            log.warning("VSI iteration skipped: factorization failed")
            break
        q.mean = q.mean + opt.step("q_mean", grads["q_mean"])
        q.cov_chol = _apply_chol_update(q.cov_chol, opt.step("q_chol", grads["q_chol"]))
        state.inducing = state.inducing + opt.step("inducing", grads["inducing"])
        state.params = KernelParams(
            log_variance=state.params.log_variance
            + opt.step("log_variance", grads["log_variance"]),
            log_lengthscale=state.params.log_lengthscale
            + opt.step("log_lengthscale", grads["log_lengthscale"]),
        )
        state.log_noise = state.log_noise + opt.step("log_noise", grads["log_noise"])

    rebuild_caches(state)
    return state, q, opt, pred
