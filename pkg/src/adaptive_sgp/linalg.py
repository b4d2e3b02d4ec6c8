"""Dense SPD linear algebra: jittered Cholesky, solves, log-determinants,
and the bordered block-inverse extension used to grow cached inverses.

Inverses of the M x M core matrices are cached as dense matrices because the
streaming updates modify them additively; Cholesky factors are only used for
from-scratch (re)builds.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPsd, NotSymmetric

MAX_JITTER_ESCALATIONS = 6
SYMMETRY_RTOL = 1e-8


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular Cholesky factor of a (possibly jittered) SPD matrix."""

    lower: np.ndarray
    jitter_used: float


def cholesky_psd(A: np.ndarray, base_jitter: float = 0.0) -> CholFactor:
    """Factor ``A + jitter*I`` with geometric jitter escalation.

    The first attempt uses ``base_jitter`` exactly (so well-conditioned
    inputs report ``jitter_used == base_jitter``).  On failure the jitter
    escalates by x10, starting from ``1e-6 * mean(diag)`` when the base was
    zero, for at most ``MAX_JITTER_ESCALATIONS`` retries.

    Raises
    ------
    NotSymmetric
        If ``A`` is not symmetric to 1e-8 relative tolerance.
    NotPsd
        If every attempt fails.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got shape {A.shape}")
    scale = max(np.linalg.norm(A), 1.0)
    if np.linalg.norm(A - A.T) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("input is not symmetric to 1e-8 relative tolerance")

    diag_scale = float(np.mean(np.abs(np.diag(A)))) or 1.0
    jitter = float(base_jitter)
    n = A.shape[0]
    for _ in range(MAX_JITTER_ESCALATIONS + 1):
        try:
            lower = scipy.linalg.cholesky(A + jitter * np.eye(n), lower=True)
            return CholFactor(lower=lower, jitter_used=jitter)
        except scipy.linalg.LinAlgError:
            jitter = jitter * 10.0 if jitter > 0.0 else 1e-6 * diag_scale
    raise NotPsd(f"Cholesky failed at maximum jitter {jitter / 10.0:g}")


def solve_psd(f: CholFactor, B: np.ndarray) -> np.ndarray:
    """Solve ``(A + jitter*I) X = B`` from the factor of A."""
    B = np.asarray(B, dtype=float)
    if B.shape[0] != f.lower.shape[0]:
        raise DimensionMismatch(
            f"factor is {f.lower.shape[0]}x{f.lower.shape[0]}, rhs has {B.shape[0]} rows"
        )
    return scipy.linalg.cho_solve((f.lower, True), B)


def logdet(f: CholFactor) -> float:
    """Log-determinant of the factored (jittered) matrix."""
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def inv_psd(A: np.ndarray, base_jitter: float = 0.0) -> np.ndarray:
    """Dense inverse of an SPD matrix via its jittered Cholesky factor."""
    f = cholesky_psd(A, base_jitter)
    inv = solve_psd(f, np.eye(A.shape[0]))
    return 0.5 * (inv + inv.T)


def inv_extend(Ainv: np.ndarray, b: np.ndarray, b0: float, tol: float = 1e-12) -> np.ndarray:
    """Inverse of the bordered matrix [[A, b], [b^T, b0]] in O(k^2).

    ``Ainv`` must be the inverse of A.  Uses the block-inversion identities;
    the Schur complement ``b0 - b^T Ainv b`` must be positive.

    Raises
    ------
    SchurNotPositive
        When the Schur complement is <= ``tol * max(|b0|, 1)``; the caller
        should rebuild the inverse from scratch.
    """
    from .errors import SchurNotPositive

    Ainv = np.asarray(Ainv, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != Ainv.shape[0]:
        raise DimensionMismatch("border vector length does not match inverse size")
    v = Ainv @ b
    schur = float(b0 - b @ v)
    if schur <= tol * max(abs(b0), 1.0):
        raise SchurNotPositive(f"Schur complement {schur:g} not positive")
    k = Ainv.shape[0]
    out = np.empty((k + 1, k + 1))
    out[:k, :k] = Ainv + np.outer(v, v) / schur
    out[:k, k] = -v / schur
    out[k, :k] = -v / schur
    out[k, k] = 1.0 / schur
    return out
