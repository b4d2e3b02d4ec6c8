"""Forgetting-factor quantities shared by both streaming algorithms:
weighted bound, adaptive optimal q, adaptive predictive distribution, and
the relevance scores that drive inducing-set maintenance.

The cached cross-moments (s_y, s_k, w_ksum) are the single source of truth
while streaming; ``rebuild_caches`` recomputes everything from the window
after any change to the kernel, noise, or inducing set.
"""

from dataclasses import dataclass, field

import numpy as np

from . import bound, linalg
from .kernel import KernelParams, kernel_matrix
from .errors import InvalidLambda
from .vsgp import DEFAULT_JITTER, PredictiveDist, VsgpModel, _clamp_var


def lambda_weights(t_cur: int, lam: float) -> np.ndarray:
    """Geometric weights [lam^(t_cur-1), ..., lam, 1], oldest first."""
    if not 0.0 < lam <= 1.0:
        raise InvalidLambda(f"forgetting factor must be in (0, 1], got {lam}")
    return lam ** np.arange(t_cur - 1, -1, -1, dtype=float)


@dataclass
class AdaptiveState:
    """Mutable state of one streaming model (single-writer)."""

    window_x: np.ndarray          # T_cur x D, oldest first
    window_y: np.ndarray          # T_cur
    inducing: np.ndarray          # k x D
    params: KernelParams
    log_noise: float
    lam: float
    capacity_m: int
    window_t: int
    jitter: float = DEFAULT_JITTER
    # caches, maintained by rank-one updates or rebuild_caches
    s_y: np.ndarray = field(default=None)      # Kux L y
    s_k: np.ndarray = field(default=None)      # Kux L Kxu
    b_lam: np.ndarray = field(default=None)    # (Kuu~ + s_k/sig2)^-1
    kuu_inv: np.ndarray = field(default=None)  # Kuu~^-1
    w_ksum: float = 0.0                        # sum_i w_i k(x_i, x_i)

    @property
    def noise_var(self) -> float:
        return float(np.exp(self.log_noise))

    @property
    def k_inducing(self) -> int:
        return self.inducing.shape[0]

    def weights(self) -> np.ndarray:
        return lambda_weights(self.window_y.shape[0], self.lam)

    def kuu_jittered(self) -> np.ndarray:
        Kuu = kernel_matrix(self.inducing, self.inducing, self.params)
        return Kuu + self.jitter * np.eye(self.k_inducing)


def from_batch(model: VsgpModel, window_x, window_y, lam: float,
               window_t: int, capacity_m: int) -> AdaptiveState:
    """Wrap a trained batch model as the initial streaming state."""
    window_x = np.asarray(window_x, dtype=float)
    if window_x.ndim == 1:
        window_x = window_x[:, None]
    state = AdaptiveState(
        window_x=window_x.copy(),
        window_y=np.asarray(window_y, dtype=float).ravel().copy(),
        inducing=model.inducing.copy(),
        params=model.params,
        log_noise=model.log_noise,
        lam=lam,
        capacity_m=capacity_m,
        window_t=window_t,
        jitter=model.jitter,
    )
    rebuild_caches(state)
    return state


def rebuild_caches(state: AdaptiveState) -> None:
    """Recompute s_y, s_k, w_ksum, b_lam, kuu_inv from the window (O(T M^2))."""
    w = state.weights()
    Kxu = kernel_matrix(state.window_x, state.inducing, state.params)
    state.s_y = Kxu.T @ (w * state.window_y)
    state.s_k = Kxu.T @ (w[:, None] * Kxu)
    state.s_k = 0.5 * (state.s_k + state.s_k.T)
    state.w_ksum = state.params.variance * float(np.sum(w))
    Kuu = state.kuu_jittered()
    state.kuu_inv = linalg.inv_psd(Kuu, 0.0)
    state.b_lam = linalg.inv_psd(Kuu + state.s_k / state.noise_var, 0.0)


def refresh_b_lam(state: AdaptiveState) -> None:
    """Refactor B_lambda from the cached s_k (O(M^3))."""
    state.b_lam = linalg.inv_psd(state.kuu_jittered() + state.s_k / state.noise_var, 0.0)


def adaptive_bound(state: AdaptiveState) -> float:
    """Forgetting-factor collapsed bound over the current window."""
    return bound.weighted_bound(state.window_x, state.window_y, state.inducing,
                                state.params, state.log_noise, state.weights(),
                                state.jitter)


def adaptive_bound_gradients(state: AdaptiveState, inducing_mask: str = "all") -> dict:
    """Analytic gradient of the adaptive bound, restricted to the masked
    inducing coordinates plus the three scalar hyperparameters."""
    return bound.weighted_bound_gradients(
        state.window_x, state.window_y, state.inducing, state.params,
        state.log_noise, state.weights(), state.jitter,
        inducing_mask=inducing_mask,
    )


def adaptive_q(state: AdaptiveState):
    """Adaptive optimal variational mean and covariance:
    mu = sigma^-2 Kuu B_lam (Kux L y),  A = Kuu B_lam Kuu."""
    Kuu = state.kuu_jittered()
    mu = Kuu @ (state.b_lam @ state.s_y) / state.noise_var
    A = Kuu @ state.b_lam @ Kuu
    return mu, 0.5 * (A + A.T)


def adaptive_predict(state: AdaptiveState, xstar) -> PredictiveDist:
    """Adaptive predictive mean/variance at one query (O(M^2) from caches)."""
    xstar = np.atleast_2d(np.asarray(xstar, dtype=float))
    ks = kernel_matrix(xstar, state.inducing, state.params).ravel()
    kss = state.params.variance
    mean = float(ks @ (state.b_lam @ state.s_y)) / state.noise_var
    var = kss + float(ks @ (state.b_lam - state.kuu_inv) @ ks)
    return PredictiveDist(mean=mean, var=_clamp_var(var))


def relevance_total(state: AdaptiveState) -> float:
    """Weighted Nystrom residual of the window given the inducing set,
    computed from the caches; clamped at zero."""
    val = state.w_ksum - float(np.sum(state.kuu_inv * state.s_k))
    return max(val, 0.0)


def relevance_per_point(state: AdaptiveState) -> np.ndarray:
    """Per-inducing-point relevance R_m = sum_i w_i k_mi^2 / k_mm.

    Heuristic ranking score (exact decomposition of the total residual only
    when Kuu is diagonal); computed fresh from the window so it stays valid
    right after a window slide, before caches are rebuilt.
    """
    w = state.weights()
    Kxu = kernel_matrix(state.window_x, state.inducing, state.params)
    return (w[:, None] * Kxu**2).sum(axis=0) / state.params.variance
