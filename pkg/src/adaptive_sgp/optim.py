"""Adam optimizer with named parameter slots.

Slots are keyed per parameter name so that long-lived parameters (noise,
kernel hyperparameters) keep their moment estimates across streaming steps
while transient slots (the newest inducing point, which is a new parameter
every step) can be reset individually.
"""

import numpy as np


class Adam:
    def __init__(self, lr: float = 0.05, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._slots: dict = {}

    def reset(self, name: str) -> None:
        self._slots.pop(name, None)

    def step(self, name: str, grad):
        """Return the ascent update for ``grad`` (add it to the parameter).

        For descent, pass the negated gradient.
        """
        grad = np.asarray(grad, dtype=float)
        m, v, t = self._slots.get(name, (np.zeros_like(grad), np.zeros_like(grad), 0))
        t += 1
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad**2
        self._slots[name] = (m, v, t)
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        update = self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return float(update) if update.ndim == 0 else update
