"""Unstructured least-squares baselines: composite LS and block LS."""

import time

import numpy as np

from ..errors import RankDeficientDesign
from ..tensor_core import numerical_rank, pinv
from ._types import EstimationResult


def _left_inverse(A, what):
    if numerical_rank(A) < A.shape[1]:
        raise RankDeficientDesign(f"{what} must have full column rank")
    return pinv(A)


def ls_composite(Y, S, X):
    """
    LS estimate of ``theta = vec(H^T kr G)`` that ignores its structure.

    Uses the Kronecker shortcut ``(S^+ kron (X kron I_L)^+) y``, evaluated as
    ``vec((X^+ kron I_L) Y3^T (S^T)^+)``.

    Parameters
    ----------
    Y : ndarray, shape (L, T, K)
    S : ndarray, shape (K, N)
    X : ndarray, shape (T, M)

    Returns
    -------
    EstimationResult
        Only ``theta_hat`` is set.
    """
    t0 = time.perf_counter()
    Xp = _left_inverse(X, "pilot matrix X")
    Sp = _left_inverse(S, "IRS matrix S")
    # (X^+ kron I_L) vec(Y[k]) = vec(Y[k] X^+T), then right-multiply by S^+T.
    W = np.einsum("ltk,mt->lmk", Y, Xp, optimize=True)        # L x M x K
    Omega = np.einsum("lmk,nk->lmn", W, Sp, optimize=True)     # L x M x N
    theta = Omega.transpose(2, 1, 0).reshape(-1)  # vec over (l, m) then n
    return EstimationResult(theta_hat=theta, wall_time=time.perf_counter() - t0)


def block_ls(Y, S, X):
    """
    Per-block LS estimates ``C_k = Y[k] (X^T)^+`` of the cascaded channels
    ``G diag(S[k]) H``; ``S`` is accepted for interface symmetry only.

    Returns
    -------
    ndarray, shape (K, L, M)
    """
    Xp = _left_inverse(X, "pilot matrix X")
    return np.einsum("ltk,mt->klm", Y, Xp, optimize=True)


def cascaded_channels(G, S, H):
    """``C_k = G diag(S[k]) H`` for every block, shape (K, L, M)."""
    return np.einsum("ln,kn,nm->klm", G, S, H, optimize=True)
