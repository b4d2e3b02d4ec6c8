"""Full adaptive streaming model: every step slides the window, prunes the
inducing set to M-1, adopts the new sample as an inducing point, and runs a
single Adam ascent step on the noise, kernel hyperparameters, and the newest
inducing point's coordinates.
"""

import logging

import numpy as np

from .adaptive import (AdaptiveState, adaptive_bound_gradients,
                       adaptive_predict, rebuild_caches)
from .errors import NotPsd
from .fast_agp import prune_inducing
from .kernel import KernelParams
from .optim import Adam

log = logging.getLogger(__name__)


def adam_params(lr: float = 0.05, beta1: float = 0.9, beta2: float = 0.999,
                eps: float = 1e-8) -> Adam:
    """Fresh optimizer state for streaming inference."""
    return Adam(lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def agp_step(state: AdaptiveState, opt: Adam, x_new, y_new: float,
             r_th: float = 1e-4):
    """One prequential step with a single inference iteration.

    Order: predict, slide window, prune to M-1, adopt x_new as the newest
    inducing point, one Adam step on {noise, kernel, newest point}, rebuild
    the predictive caches from scratch.  A factorization failure skips the
    optimizer step for this sample; the stream never aborts.
    """
    pred = adaptive_predict(state, x_new)

    x_row = np.atleast_2d(np.asarray(x_new, dtype=float))
    state.window_x = np.vstack([state.window_x, x_row])
    state.window_y = np.append(state.window_y, float(y_new))
    if state.window_y.shape[0] > state.window_t:
        state.window_x = state.window_x[1:]
        state.window_y = state.window_y[1:]

    prune_inducing(state, r_th, max_k=state.capacity_m - 1)
    state.inducing = np.vstack([state.inducing, x_row])

    # The newest inducing point is a brand-new parameter every step, so its
    # Adam moments restart; the scalar hyperparameters keep theirs.
    opt.reset("u_new")
    try:
        g = adaptive_bound_gradients(state, inducing_mask="last")
        state.inducing[-1] += opt.step("u_new", g["inducing"].ravel())
        state.params = KernelParams(
            log_variance=state.params.log_variance
            + opt.step("log_variance", g["log_variance"]),
            log_lengthscale=state.params.log_lengthscale
            + opt.step("log_lengthscale", g["log_lengthscale"]),
        )
        state.log_noise = state.log_noise + opt.step("log_noise", g["log_noise"])
    except NotPsd:
        log.warning("inference step skipped: factorization failed")

    rebuild_caches(state)
    return state, opt, pred
