"""Inference-free streaming updates (the fast algorithm): rank-one data
addition, windowed removal, relevance-gated inducing-point addition via
block extension, and pruning.  Kernel and noise parameters are never touched
here.
"""

import logging

import numpy as np

from . import linalg
from .adaptive import (AdaptiveState, adaptive_predict, rebuild_caches,
                       refresh_b_lam, relevance_per_point, relevance_total)
from .errors import SchurNotPositive
from .kernel import kernel_matrix
from .vsgp import PredictiveDist

log = logging.getLogger(__name__)


def _kvec(state: AdaptiveState, x) -> np.ndarray:
    """Kernel products between the inducing set and one input."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return kernel_matrix(state.inducing, x, state.params).ravel()


def rank1_add(state: AdaptiveState, x_new, y_new: float) -> AdaptiveState:
    """Ingest one sample without eviction (warm-up phase).

    s_y <- lam*s_y + k_new*y,  s_k <- lam*s_k + k_new k_new^T, then B_lambda
    is refactored from the cached s_k (O(M^3))."""
    k_new = _kvec(state, x_new)
    y_new = float(y_new)
    state.s_y = state.lam * state.s_y + k_new * y_new
    state.s_k = state.lam * state.s_k + np.outer(k_new, k_new)
    state.w_ksum = state.lam * state.w_ksum + state.params.variance
    state.window_x = np.vstack([state.window_x, np.atleast_2d(np.asarray(x_new, dtype=float))])
    state.window_y = np.append(state.window_y, y_new)
    refresh_b_lam(state)
    return state


def windowed_add(state: AdaptiveState, x_new, y_new: float) -> AdaptiveState:
    """Ingest one sample and evict the oldest (window at capacity T).

    The departing sample carries weight lam^T after the new sample's
    geometric discount, so its contribution is removed with that coefficient
    from every cache."""
    if state.window_y.shape[0] != state.window_t:
        raise ValueError("windowed_add requires a full window")
    k_new = _kvec(state, x_new)
    k_old = _kvec(state, state.window_x[0])
    y_new = float(y_new)
    y_old = float(state.window_y[0])
    wT = state.lam ** state.window_t

    state.s_y = state.lam * state.s_y + k_new * y_new - wT * k_old * y_old
    state.s_k = (state.lam * state.s_k + np.outer(k_new, k_new)
                 - wT * np.outer(k_old, k_old))
    state.w_ksum = (state.lam * state.w_ksum + state.params.variance
                    - wT * state.params.variance)
    state.window_x = np.vstack([state.window_x[1:],
                                np.atleast_2d(np.asarray(x_new, dtype=float))])
    state.window_y = np.append(state.window_y[1:], y_new)
    refresh_b_lam(state)
    return state


def maybe_add_inducing(state: AdaptiveState, x_new, r_th_tot: float):
    """Adopt the newest input as an inducing point when the weighted
    Nystrom residual exceeds the threshold.

    Both cached inverses are grown by bordered block extension (O(M^2));
    a non-positive Schur complement (e.g. a duplicated inducing point)
    falls back to a from-scratch rebuild.
    """
    if relevance_total(state) <= r_th_tot:
        return state, False

    x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
    w = state.weights()
    sig2 = state.noise_var
    var = state.params.variance

    b_kuu = _kvec(state, x_new)                     # k(U, x_new)
    k_x = kernel_matrix(state.window_x, x_new, state.params).ravel()
    Kux = kernel_matrix(state.inducing, state.window_x, state.params)

    b_col = b_kuu + (Kux @ (w * k_x)) / sig2
    b0 = var + state.jitter + float(np.dot(w * k_x, k_x)) / sig2

    try:
        kuu_inv_ext = linalg.inv_extend(state.kuu_inv, b_kuu, var + state.jitter)
        b_lam_ext = linalg.inv_extend(state.b_lam, b_col, b0)
    except SchurNotPositive:
        log.info("block extension rejected; rebuilding inverses from scratch")
        state.inducing = np.vstack([state.inducing, x_new])
        rebuild_caches(state)
        return state, True

    state.kuu_inv = kuu_inv_ext
    state.b_lam = b_lam_ext
    s_y_new = float(np.dot(w * k_x, state.window_y))
    s_k_row = Kux @ (w * k_x)
    s_k_diag = float(np.dot(w * k_x, k_x))
    k = state.k_inducing
    s_k = np.empty((k + 1, k + 1))
    s_k[:k, :k] = state.s_k
    s_k[:k, k] = s_k_row
    s_k[k, :k] = s_k_row
    s_k[k, k] = s_k_diag
    state.s_k = s_k
    state.s_y = np.append(state.s_y, s_y_new)
    state.inducing = np.vstack([state.inducing, x_new])
    return state, True


def prune_inducing(state: AdaptiveState, r_th: float, max_k: int) -> AdaptiveState:
    """Drop low-relevance inducing points, then the lowest-scoring ones until
    at most ``max_k`` remain (never below one); rebuild caches from scratch."""
    r = relevance_per_point(state)
    keep = r >= r_th * float(np.max(r))
    if not np.any(keep):
        keep[int(np.argmax(r))] = True
    idx = np.flatnonzero(keep)
    if idx.size > max_k:
        order = np.argsort(r[idx], kind="stable")
        idx = np.sort(idx[order[idx.size - max_k:]])
    if idx.size == state.k_inducing:
        return state
    state.inducing = state.inducing[idx]
    rebuild_caches(state)
    return state


def fast_agp_step(state: AdaptiveState, x_new, y_new: float,
                  r_th: float = 1e-4):
    """One prequential step: predict, ingest, grow/shrink the inducing set.

    Returns ``(state, pred_before)`` where the prediction is made before the
    new target is used for any update."""
    pred: PredictiveDist = adaptive_predict(state, x_new)
    if state.window_y.shape[0] < state.window_t:
        rank1_add(state, x_new, y_new)
    else:
        windowed_add(state, x_new, y_new)
    r_th_tot = state.w_ksum / state.window_t
    maybe_add_inducing(state, x_new, r_th_tot)
    prune_inducing(state, r_th, state.capacity_m)
    return state, pred
