"""
Dense complex matrix and 3-way tensor kernel.

Conventions used everywhere in the package:

* ``vec`` stacks columns (column-major), so that
  ``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``.
* A received-signal tensor is stored as a numpy array of shape ``(L, T, K)``;
  ``Y[:, :, k]`` is the k-th frontal slice.
* Mode unfoldings follow the slice-stacking order

  - mode 1: ``[Y[1], ..., Y[K]]``                  (L x TK)
  - mode 2: ``[Y[1].T, ..., Y[K].T]``              (T x LK)
  - mode 3: rows ``vec(Y[k]).T``                   (K x LT)

  so that for ``Y = [[A, B, C]]`` the unfoldings are ``A (C kr B).T``,
  ``B (C kr A).T`` and ``C (B kr A).T``.
"""

import numpy as np

from .errors import ColumnMismatch, NoConvergence, ShapeMismatch, ZeroMatrix

__all__ = [
    "kron", "khatri_rao", "hadamard", "vec", "unvec", "vecd", "diag",
    "build_parafac_tensor", "unfold", "fold", "rank1_approx", "pinv",
    "numerical_rank", "kr_gram",
]

# Fixed start for the power iteration so that rank1_approx is a pure function.
_POWER_START_SEED = 0x1F5A7C


def _as_matrix(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {A.shape}")
    return A


def kron(A, B):
    """Kronecker product of two matrices."""
    return np.kron(_as_matrix(A, "A"), _as_matrix(B, "B"))


def khatri_rao(A, B):
    """
    Column-wise Kronecker product.

    Parameters
    ----------
    A : ndarray, shape (I, N)
    B : ndarray, shape (J, N)

    Returns
    -------
    ndarray, shape (I*J, N)
        Column ``n`` is ``kron(A[:, n], B[:, n])``.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ColumnMismatch(
            f"Khatri-Rao operands need equal column counts: "
            f"{A.shape[1]} != {B.shape[1]}")
    I, N = A.shape
    J = B.shape[0]
    return (A[:, None, :] * B[None, :, :]).reshape(I * J, N)


def hadamard(A, B):
    """Elementwise product of two equally shaped arrays."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ShapeMismatch(f"Hadamard operands differ: {A.shape} vs {B.shape}")
    return A * B


def vec(A):
    """Stack the columns of ``A`` into one vector."""
    return _as_matrix(A).reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec` for an ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise ShapeMismatch(
            f"cannot unvec a vector of shape {v.shape} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def vecd(A):
    """Main diagonal of a square matrix as a vector."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"vecd needs a square matrix, got {A.shape}")
    return np.diag(A).copy()


def diag(v):
    """Diagonal matrix holding ``v`` on its main diagonal."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ShapeMismatch(f"diag needs a vector, got shape {v.shape}")
    return np.diag(v)


def build_parafac_tensor(A, B, C):
    """
    Third-order tensor ``[[A, B, C]]``.

    Entry ``(i, j, k)`` is ``sum_n A[i, n] B[j, n] C[k, n]``; frontal slice
    ``k`` is ``A @ diag(C[k]) @ B.T``.

    Parameters
    ----------
    A : ndarray, shape (I, N)
    B : ndarray, shape (J, N)
    C : ndarray, shape (K, N)

    Returns
    -------
    ndarray, shape (I, J, K)
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    C = _as_matrix(C, "C")
    if not A.shape[1] == B.shape[1] == C.shape[1]:
        raise ColumnMismatch(
            f"factor column counts differ: {A.shape[1]}, {B.shape[1]}, "
            f"{C.shape[1]}")
    return np.einsum("in,jn,kn->ijk", A, B, C, optimize=True)


_UNFOLD_AXES = {1: (0, 2, 1), 2: (1, 2, 0), 3: (2, 1, 0)}


def unfold(Y, mode):
    """
    Matrix unfolding of a 3-way tensor.

    Parameters
    ----------
    Y : ndarray, shape (I, J, K)
    mode : {1, 2, 3}

    Returns
    -------
    ndarray
        ``(I, K*J)``, ``(J, K*I)`` or ``(K, J*I)`` for modes 1, 2, 3.
    """
    Y = np.asarray(Y)
    if Y.ndim != 3:
        raise ShapeMismatch(f"expected a 3-way tensor, got shape {Y.shape}")
    if mode not in _UNFOLD_AXES:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    P = Y.transpose(_UNFOLD_AXES[mode])
    return P.reshape(P.shape[0], -1)


def fold(Ymat, mode, dims):
    """Inverse of :func:`unfold`; ``dims`` is the tensor shape (I, J, K)."""
    if mode not in _UNFOLD_AXES:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    axes = _UNFOLD_AXES[mode]
    permuted = tuple(dims[a] for a in axes)
    Ymat = np.asarray(Ymat)
    if Ymat.size != np.prod(dims):
        raise ShapeMismatch(f"cannot fold {Ymat.shape} into {tuple(dims)}")
    return Ymat.reshape(permuted).transpose(np.argsort(axes))


def rank1_approx(A, rng=None, tol=1e-12, max_iter=500):
    """
    Dominant singular triplet of ``A`` by power iteration on ``A^H A``.

    Parameters
    ----------
    A : ndarray, shape (L, M)
    rng : numpy.random.Generator, optional
        Source of the random unit start vector. Defaults to a generator with
        a fixed seed, which makes the result a function of ``A`` alone.
    tol : float
        Stop once ``||A^H A v - lam v|| <= tol * lam``.
    max_iter : int
        Power steps before falling back to a dense SVD.

    Returns
    -------
    u : ndarray, shape (L,)
    sigma : float
    v : ndarray, shape (M,)
        ``sigma * outer(u, v.conj())`` is the best rank-1 approximation. The
        largest-modulus entry of ``u`` (first one on ties) is real positive.
    """
    A = _as_matrix(A)
    if not np.any(A):
        raise ZeroMatrix("rank-1 approximation of a zero matrix")
    A = A.astype(complex, copy=False)
    if rng is None:
        rng = np.random.default_rng(_POWER_START_SEED)
    M = A.shape[1]
    B = A.conj().T @ A
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = B @ v
        lam = np.vdot(v, w).real
        if np.linalg.norm(w - lam * v) <= tol * lam:
            break
        v = w / np.linalg.norm(w)
    else:
        try:
            return _rank1_svd(A)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("power iteration and SVD both failed") from exc
    Av = A @ v
    sigma = np.linalg.norm(Av)
    return _fix_phase(Av / sigma, sigma, v)


def _rank1_svd(A):
    U, s, Vh = np.linalg.svd(A)
    return _fix_phase(U[:, 0], s[0], Vh[0].conj())


def _fix_phase(u, sigma, v):
    j = np.argmax(np.abs(u))
    rot = np.conj(u[j]) / abs(u[j])
    u = u * rot
    u[j] = abs(u[j])
    return u, float(sigma), v * rot


def numerical_rank(A, rtol=None):
    """Number of singular values above ``rtol * sigma_max``.

    The default ``rtol`` is ``max(A.shape) * eps``.
    """
    A = _as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    if rtol is None:
        rtol = max(A.shape) * np.finfo(float).eps
    return int(np.sum(s > rtol * s[0]))


def pinv(A, rtol=None):
    """SVD pseudo-inverse with rank tolerance ``max(A.shape) * eps``."""
    A = _as_matrix(A)
    if rtol is None:
        rtol = max(A.shape) * np.finfo(float).eps
    return np.linalg.pinv(A, rcond=rtol)


def kr_gram(A, B):
    """``(A kr B)^H (A kr B)`` evaluated as ``(A^H A) * (B^H B)``."""
    return (A.conj().T @ A) * (B.conj().T @ B)
