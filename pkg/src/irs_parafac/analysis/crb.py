"""
Cramer-Rao bounds for the composite channel ``theta = vec(H^T kr G)``.

The vectorised observation is ``y = U theta + b`` with
``U = S kron X kron I_L`` and white CN(0, sigma2) noise. Stacking real and
imaginary parts, the Slepian-Bangs Fisher matrix is

    F = (2 / sigma2) [[Re(U^H U), -Im(U^H U)],
                      [Im(U^H U),  Re(U^H U)]]

(``Im(U^H U)`` is antisymmetric, so ``F`` is symmetric).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import RankDeficientDesign


@dataclass(frozen=True)
class CrbReport:
    """Traces of the CRB on the real and imaginary parts of ``theta``."""

    sigma2: float
    dims: tuple
    trace_real: float
    trace_imag: float
    method: str

    @property
    def trace_bound(self):
        return self.trace_real + self.trace_imag


def crb_closed_form(sigma2, M, L, N, K, T):
    """
    Bound for semi-unitary designs (``X^H X = T I``, ``S^H S = K I``):
    ``CRB(Re theta) = CRB(Im theta) = sigma2 / (2KT) I`` so the total is
    ``sigma2 M N L / (K T)``.
    """
    part = sigma2 * M * N * L / (2.0 * K * T)
    return CrbReport(float(sigma2), (M, L, N, K, T), part, part, "closed_form")


def gram_UhU(S, X, L):
    """``U^H U = (S^H S) kron (X^H X) kron I_L`` without forming ``U``."""
    return np.kron(np.kron(S.conj().T @ S, X.conj().T @ X), np.eye(L))


def fisher_matrix(S, X, L, sigma2):
    """Dense ``2MNL x 2MNL`` Fisher matrix of ``(Re theta, Im theta)``."""
    W = gram_UhU(S, X, L)
    Mr, Mi = W.real, W.imag
    return (2.0 / sigma2) * np.block([[Mr, -Mi], [Mi, Mr]])


def crb_numerical(S, X, L, sigma2):
    """
    CRB traces for arbitrary full-column-rank designs.

    Uses the 2x2 block-inverse formulas with ``Mr = Re(U^H U)`` and
    ``Mi = Im(U^H U)``::

        tr CRB(Re) = sigma2/2 tr[(Mr + Mi Mr^-1 Mi)^-1]
        tr CRB(Im) = sigma2/2 tr[Mr^-1 - Mr^-1 Mi (Mr + Mi Mr^-1 Mi)^-1 Mi Mr^-1]
    """
    K, N = S.shape
    T, M = X.shape
    W = gram_UhU(S, X, L)
    Mr, Mi = W.real, W.imag
    try:
        Mr_inv = np.linalg.inv(Mr)
        schur_inv = np.linalg.inv(Mr + Mi @ Mr_inv @ Mi)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientDesign("Fisher matrix is singular") from exc
    if not (np.all(np.isfinite(Mr_inv)) and np.all(np.isfinite(schur_inv))):
        raise RankDeficientDesign("Fisher matrix is singular")
    tr_re = 0.5 * sigma2 * np.trace(schur_inv)
    tr_im = 0.5 * sigma2 * np.trace(Mr_inv - Mr_inv @ Mi @ schur_inv @ Mi @ Mr_inv)
    return CrbReport(float(sigma2), (M, L, N, K, T), float(tr_re), float(tr_im),
                     "numerical_fim")


def crb_trace_factor(S, X, L):
    """
    ``tr((U^H U)^-1)``, so that the total bound is ``sigma2`` times it.

    Exploits the Kronecker structure; returns ``nan`` for rank-deficient
    designs.
    """
    try:
        a = np.trace(np.linalg.inv(S.conj().T @ S)).real
        b = np.trace(np.linalg.inv(X.conj().T @ X)).real
    except np.linalg.LinAlgError:
        return float("nan")
    if S.shape[0] < S.shape[1] or X.shape[0] < X.shape[1]:
        return float("nan")
    return float(a * b * L)
