"""
Alternating least-squares estimators: BALS (known IRS matrix), its
orthogonal-design fast path, and TALS (IRS matrix re-estimated).

Every LS step has the form ``min_W ||Y_n - W (A kr B)^T||_F``. Its solution
``Y_n (A kr B)^* inv(conj(Gram))`` uses the Hadamard identity
``(A kr B)^H (A kr B) = (A^H A) * (B^H B)`` so that the tall Khatri-Rao
factor never needs its own factorization.
"""

import time

import numpy as np

from ..errors import InfeasibleDesign, NonOrthogonalDesign, RankDeficientUpdate
from ..system_model import composite_theta, crandn
from ..tensor_core import kr_gram, khatri_rao, numerical_rank, pinv, unfold
from ._types import TALS_DEFAULTS, BalsOptions, EstimationResult

_EPS = np.finfo(float).eps


def _solve_gram(P, gram, what):
    """``P @ inv(conj(gram))`` for a Hermitian PSD ``gram``; rank-checked."""
    w, V = np.linalg.eigh(gram)
    tol = gram.shape[0] * _EPS * max(w[-1], 0.0)
    if w[-1] <= 0 or w[0] <= tol:
        raise RankDeficientUpdate(f"{what}: Khatri-Rao factor lost column rank")
    # conj(gram) = V^* diag(w) V^T
    return ((P @ V.conj()) / w) @ V.T


def _unfoldings(Y):
    return unfold(Y, 1), unfold(Y, 2), unfold(Y, 3)


def _update_G(Y1, S, Z):
    M1 = khatri_rao(S, Z)
    return _solve_gram(Y1 @ M1.conj(), kr_gram(S, Z), "G update")


def _update_H(Y2, S, G, Xp):
    M2 = khatri_rao(S, G)
    Ht = _solve_gram(Xp @ (Y2 @ M2.conj()), kr_gram(S, G), "H update")
    return Ht.T, M2


def _update_S(Y3, Z, G):
    M3 = khatri_rao(Z, G)
    return _solve_gram(Y3 @ M3.conj(), kr_gram(Z, G), "S update"), M3


def _initial_H(opts, N, M, rng):
    if opts.init == "provided":
        H0 = np.array(opts.H_init, dtype=complex)
        if H0.shape != (N, M):
            raise ValueError(f"H_init must have shape {(N, M)}, got {H0.shape}")
        return H0
    if rng is None:
        rng = np.random.default_rng()
    return crandn(rng, (N, M))


def _check_dims(Y, S, X):
    L, T, K = Y.shape
    if S.shape[0] != K or X.shape[0] != T:
        raise ValueError(
            f"tensor {Y.shape} does not match S {S.shape} and X {X.shape}")
    if numerical_rank(X) < X.shape[1]:
        raise InfeasibleDesign("pilot matrix X must have full column rank (T >= M)")


class _Stopper:
    """Tracks ``e(i)`` and applies the ``|e(i) - e(i-1)| <= delta`` rule."""

    def __init__(self, Y, opts):
        self.scale = float(np.linalg.norm(Y) ** 2) if opts.normalize_error else 1.0
        if self.scale == 0.0:
            raise ValueError("received tensor is identically zero")
        self.delta = opts.delta
        self.trace = []

    def update(self, sq_err):
        e = sq_err / self.scale
        prev = self.trace[-1] if self.trace else np.inf
        self.trace.append(e)
        return abs(prev - e) <= self.delta


def _finish(H, G, S_hat, stopper, i, converged, t0, history, events=()):
    return EstimationResult(
        theta_hat=composite_theta(H, G), H_hat=H, G_hat=G, S_hat=S_hat,
        iterations=i, converged=converged,
        reconstruction_error_trace=stopper.trace,
        wall_time=time.perf_counter() - t0, history=history,
        degenerate_columns=list(events))


def bals(Y, S, X, opts=BalsOptions(), rng=None):
    """
    Bilinear ALS with a known IRS matrix.

    Alternates ``G = Y1 [(S kr X H^T)^T]^+`` and
    ``H^T = X^+ Y2 [(S kr G)^T]^+`` from a random CN(0, 1) ``H``.

    Parameters
    ----------
    Y : ndarray, shape (L, T, K)
    S : ndarray, shape (K, N)
    X : ndarray, shape (T, M)
    opts : BalsOptions
    rng : numpy.random.Generator, optional
        Stream for the random initialisation.

    Returns
    -------
    EstimationResult

    Raises
    ------
    RankDeficientUpdate
        If ``S kr X H^T`` or ``S kr G`` loses column rank.
    """
    if opts.use_orthogonal_fastpath:
        return bals_orthogonal(Y, S, X, opts, rng)
    t0 = time.perf_counter()
    _check_dims(Y, S, X)
    Y1, Y2, _ = _unfoldings(Y)
    Xp = pinv(X)
    H = _initial_H(opts, S.shape[1], X.shape[1], rng)
    stopper = _Stopper(Y, opts)
    history = [] if opts.keep_history else None
    converged = False
    for i in range(1, opts.max_iter + 1):
        G = _update_G(Y1, S, X @ H.T)
        H, M2 = _update_H(Y2, S, G, Xp)
        if history is not None:
            history.append((G.copy(), H.copy()))
        resid = Y2 - (X @ H.T) @ M2.T
        if stopper.update(np.vdot(resid, resid).real):
            converged = True
            break
    return _finish(H, G, None, stopper, i, converged, t0, history)


def _check_orthogonal(A, what, tol=1e-8):
    rows, cols = A.shape
    err = np.linalg.norm(A.conj().T @ A - rows * np.eye(cols))
    if err > tol * rows * np.sqrt(cols):
        raise NonOrthogonalDesign(f"{what}^H {what} != {rows} I (error {err:.3g})")


def _sq_norms(A, axis, rng, events):
    """Squared row/column norms; re-draws exactly-vanished vectors in place."""
    norms = np.sum(np.abs(A) ** 2, axis=axis)
    dead = np.flatnonzero(norms <= np.finfo(float).tiny)
    for n in dead:
        fresh = crandn(rng, A.shape[axis])
        if axis == 1:
            A[n, :] = fresh
        else:
            A[:, n] = fresh
        events.append(n)
    if dead.size:
        norms = np.sum(np.abs(A) ** 2, axis=axis)
    return norms


def bals_orthogonal(Y, S, X, opts=BalsOptions(), rng=None):
    """
    BALS for semi-unitary designs (``S^H S = K I``, ``X^H X = T I``).

    The pseudo-inverses collapse to scaled products:
    ``G = Y1 M1^* Sigma_H^{-1} / KT`` with ``M1 = S kr X H^T`` and
    ``H^T = X^H Y2 M2^* Sigma_G^{-1} / KT`` with ``M2 = S kr G``, where
    ``Sigma_H = diag(||h_n||^2)`` and ``Sigma_G = diag(||g_n||^2)``.
    Columns whose norm underflows to zero are re-drawn; their indices are
    reported in ``degenerate_columns``.
    """
    t0 = time.perf_counter()
    _check_dims(Y, S, X)
    _check_orthogonal(S, "S")
    _check_orthogonal(X, "X")
    K, T = S.shape[0], X.shape[0]
    KT = K * T
    if rng is None:
        rng = np.random.default_rng()
    Y1, Y2, _ = _unfoldings(Y)
    Xh = X.conj().T
    H = _initial_H(opts, S.shape[1], X.shape[1], rng)
    stopper = _Stopper(Y, opts)
    history = [] if opts.keep_history else None
    events = []
    converged = False
    for i in range(1, opts.max_iter + 1):
        sigma_h = _sq_norms(H, 1, rng, events)
        M1 = khatri_rao(S, X @ H.T)
        G = (Y1 @ M1.conj()) / (KT * sigma_h)
        sigma_g = _sq_norms(G, 0, rng, events)
        M2 = khatri_rao(S, G)
        H = ((Xh @ (Y2 @ M2.conj())) / (KT * sigma_g)).T
        if history is not None:
            history.append((G.copy(), H.copy()))
        resid = Y2 - (X @ H.T) @ M2.T
        if stopper.update(np.vdot(resid, resid).real):
            converged = True
            break
    return _finish(H, G, None, stopper, i, converged, t0, history, events)


def _exact_line_search(Y3, X, cur, prev, resid):
    """
    Real step ``mu`` minimising the fit along ``A + mu (A - A_prev)``.

    The model ``S(mu) (Z(mu) kr G(mu))^T`` is cubic in ``mu``, so the
    squared residual is a degree-6 polynomial whose minimiser is found from
    the real roots of its derivative. Returns ``(mu, sq_err)``; ``mu = 0``
    when no step improves the fit.
    """
    G, H, S = cur
    dG, dH, dS = (a - b for a, b in zip(cur, prev))
    Z, dZ = X @ H.T, X @ dH.T
    P0 = khatri_rao(Z, G)
    P1 = khatri_rao(dZ, G) + khatri_rao(Z, dG)
    P2 = khatri_rao(dZ, dG)
    terms = [resid, -(dS @ P0.T + S @ P1.T), -(dS @ P1.T + S @ P2.T), -(dS @ P2.T)]
    flat = np.stack([t.ravel() for t in terms])
    W = (flat.conj() @ flat.T).real
    coef = np.zeros(7)  # coef[p] multiplies mu**p
    for a in range(4):
        for b in range(4):
            coef[a + b] += W[a, b]
    dcoef = np.arange(1, 7) * coef[1:]
    roots = np.roots(dcoef[::-1])
    cands = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))].real
    base = coef[0]
    best_mu, best = 0.0, base
    for mu in cands:
        val = np.polyval(coef[::-1], mu)
        if val < best:
            best_mu, best = float(mu), float(val)
    return best_mu, best


def tals(Y, X, S_init, opts=TALS_DEFAULTS, rng=None):
    """
    Trilinear ALS: jointly estimate ``G``, ``H`` and the IRS matrix ``S``.

    Each sweep performs the two BALS updates with the current ``S_hat`` and
    then ``S = Y3 [(X H^T kr G)^T]^+``. ``S_hat`` starts from ``S_init``
    (normally the designed DFT matrix) and ``H`` from CN(0, 1).

    With ``opts.line_search`` each sweep after the first is followed by an
    exact line search along the direction of the last update of all three
    factors (real step size). This shortens the slow "swamp" phases of
    plain ALS without changing its fixed points.

    With ``opts.restarts > 1`` (and random initialisation) the iteration
    is repeated from fresh ``H`` draws and the run with the lowest final error is returned; its
    own iteration count is reported, while ``wall_time`` covers all runs.

    Returns
    -------
    EstimationResult
        With ``S_hat`` set. ``theta_hat`` carries the scaling of the
        estimated factors, which is only defined up to ``S_hat``'s columns.
    """
    t0 = time.perf_counter()
    S0 = np.array(S_init, dtype=complex)
    _check_dims(Y, S0, X)
    if opts.init == "random_gaussian" and rng is None:
        rng = np.random.default_rng()
    best = None
    # a provided H_init makes every restart identical
    for _ in range(1 if opts.init == "provided" else opts.restarts):
        res = _tals_once(Y, X, S0, opts, rng)
        if best is None or res.reconstruction_error_trace[-1] < best.reconstruction_error_trace[-1]:
            best = res
    best.wall_time = time.perf_counter() - t0
    return best


def _tals_once(Y, X, S, opts, rng):
    t0 = time.perf_counter()
    S = S.copy()
    Y1, Y2, Y3 = _unfoldings(Y)
    Xp = pinv(X)
    H = _initial_H(opts, S.shape[1], X.shape[1], rng)
    stopper = _Stopper(Y, opts)
    history = [] if opts.keep_history else None
    converged = False
    prev = None
    for i in range(1, opts.max_iter + 1):
        G = _update_G(Y1, S, X @ H.T)
        H, _ = _update_H(Y2, S, G, Xp)
        S, M3 = _update_S(Y3, X @ H.T, G)
        resid = Y3 - S @ M3.T
        err = np.vdot(resid, resid).real
        if opts.line_search and prev is not None:
            mu, err_ls = _exact_line_search(Y3, X, (G, H, S), prev, resid)
            if mu != 0.0:
                G, H, S = (a + mu * (a - b) for a, b in zip((G, H, S), prev))
                err = err_ls
        prev = (G, H, S)
        if history is not None:
            history.append((G.copy(), H.copy(), S.copy()))
        if stopper.update(err):
            converged = True
            break
    return _finish(H, G, S, stopper, i, converged, t0, history)
