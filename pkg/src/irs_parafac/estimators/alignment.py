"""Removal of the scaling/permutation ambiguities before computing errors."""

import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment


def align_scaling(H_hat, G_hat, H_true, G_true):
    """
    Rescale each estimated pair ``(h_n, g_n)`` by ``(d_n, 1/d_n)``.

    ``d_n`` minimises ``||d_n h_hat_n - h_n||^2`` (``h_n`` is row ``n`` of
    ``H``). Since the two factors are scaled reciprocally, ``H^T kr G`` is
    unchanged. Columns with a zero estimate are left untouched and reported
    through a ``RuntimeWarning``.

    Returns
    -------
    H_aligned, G_aligned : ndarray
    """
    H_hat = np.asarray(H_hat)
    G_hat = np.asarray(G_hat)
    if H_hat.shape != np.shape(H_true) or G_hat.shape != np.shape(G_true):
        raise ValueError("estimated and true channels have different shapes")
    num = np.sum(H_hat.conj() * H_true, axis=1)
    den = np.sum(np.abs(H_hat) ** 2, axis=1)
    skip = (den == 0) | (num == 0)
    if np.any(skip):
        warnings.warn(f"align_scaling: zero estimated columns {np.flatnonzero(skip).tolist()}",
                      RuntimeWarning, stacklevel=2)
    d = np.where(skip, 1.0, num / np.where(skip, 1.0, den))
    return H_hat * d[:, None], G_hat / d[None, :]


def match_columns(A_hat, A_true):
    """
    Column permutation that best matches ``A_hat`` to ``A_true``.

    Maximises the summed absolute normalised correlations with the
    Hungarian algorithm. Returns ``perm`` such that ``A_hat[:, perm]`` lines
    up with ``A_true``.
    """
    a = A_hat / np.maximum(np.linalg.norm(A_hat, axis=0), np.finfo(float).tiny)
    b = A_true / np.maximum(np.linalg.norm(A_true, axis=0), np.finfo(float).tiny)
    corr = np.abs(b.conj().T @ a)
    _, perm = linear_sum_assignment(-corr)
    return perm


def column_scales(A_hat, A_true):
    """Per-column complex scalars ``c_n`` minimising ``||c_n a_hat_n - a_n||``."""
    num = np.sum(A_hat.conj() * A_true, axis=0)
    den = np.sum(np.abs(A_hat) ** 2, axis=0)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)
