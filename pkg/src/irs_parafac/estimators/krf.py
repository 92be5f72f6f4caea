"""Closed-form Khatri-Rao factorization estimator."""

import time

import numpy as np

from ..system_model import composite_theta
from ..tensor_core import rank1_approx
from ._types import EstimationResult
from .linear import _left_inverse

_ZERO_RTOL = 1e-13


def bilinear_filter(Y, S, X):
    """
    Filtered virtual channel ``Omega = (X^+ kron I_L) Y3^T (S^T)^+``.

    Returned as an ``(N, L, M)`` stack whose slice ``n`` is
    ``unvec_{L x M}(omega_n)``, a noisy version of ``g_n h_n^T``.
    """
    Xp = _left_inverse(X, "pilot matrix X")
    Sp = _left_inverse(S, "IRS matrix S")
    W = np.einsum("ltk,mt->lmk", Y, Xp, optimize=True)
    return np.einsum("lmk,nk->nlm", W, Sp, optimize=True)


def krf(Y, S, X):
    """
    Estimate ``H`` and ``G`` by ``N`` rank-1 approximations.

    After bilinear filtering, each ``L x M`` slice is approximated by
    ``sigma u v^H`` and split symmetrically:
    ``g_n = sqrt(sigma) u``, ``h_n = sqrt(sigma) conj(v)``.

    Parameters
    ----------
    Y : ndarray, shape (L, T, K)
    S : ndarray, shape (K, N)
        Known IRS matrix, full column rank (``K >= N``).
    X : ndarray, shape (T, M)
        Known pilot matrix, full column rank (``T >= M``).

    Returns
    -------
    EstimationResult
        Slices at round-off level (relative to the whole filtered tensor)
        yield zero ``g_n`` and ``h_n`` and are listed in ``degenerate_columns``.
    """
    t0 = time.perf_counter()
    Omega = bilinear_filter(Y, S, X)
    N, L, M = Omega.shape
    H_hat = np.zeros((N, M), dtype=complex)
    G_hat = np.zeros((L, N), dtype=complex)
    degenerate = []
    floor = _ZERO_RTOL * np.linalg.norm(Omega)
    for n in range(N):
        if np.linalg.norm(Omega[n]) <= floor:
            degenerate.append(n)
            continue
        u, sigma, v = rank1_approx(Omega[n])
        root = np.sqrt(sigma)
        G_hat[:, n] = root * u
        H_hat[n, :] = root * v.conj()
    return EstimationResult(
        theta_hat=composite_theta(H_hat, G_hat), H_hat=H_hat, G_hat=G_hat,
        iterations=1, converged=True, wall_time=time.perf_counter() - t0,
        degenerate_columns=degenerate)
