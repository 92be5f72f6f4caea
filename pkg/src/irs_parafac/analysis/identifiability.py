"""
Design conditions for the estimators.

All checks are integer inequalities in the tensor dimensions and the ranks
of the channel matrices, so :func:`check_design` never touches data.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..tensor_core import khatri_rao, numerical_rank

#: Looser relative threshold used when channels are rank-deficient by design.
LOOSE_RANK_RTOL = 1e-8


@dataclass(frozen=True)
class Condition:
    """One inequality ``lhs >= rhs``; ``slack = lhs - rhs``."""

    name: str
    lhs: int
    rhs: int

    @property
    def passed(self):
        return self.lhs >= self.rhs

    @property
    def slack(self):
        return self.lhs - self.rhs


@dataclass(frozen=True)
class DesignReport:
    """
    Outcome of every design inequality for one configuration.

    Attributes
    ----------
    dims : dict
        Effective ``M, L, N, K, T`` (multi-user mappings already applied).
    rank_H, rank_G : int
        Ranks assumed for the BS-IRS and IRS-UT channels.
    conditions : dict
        Maps a condition name to its :class:`Condition`.
    """

    dims: dict
    rank_H: int
    rank_G: int
    conditions: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.conditions[name]

    @property
    def krf_feasible(self):
        return self["krf_K"].passed and self["krf_T"].passed

    @property
    def bals_necessary(self):
        return self["bals_K"].passed and self["bals_T"].passed

    @property
    def bals_sufficient(self):
        return self["kr_rank_G"].passed and self["kr_rank_H"].passed

    @property
    def tals_unique(self):
        return self["kruskal"].passed

    def feasible_for(self, estimator):
        """Whether the necessary conditions of ``estimator`` hold."""
        if estimator in ("ls", "krf", "block_ls"):
            return self.krf_feasible
        if estimator in ("bals", "bals_orth"):
            return self.bals_necessary
        if estimator == "tals":
            return self.bals_necessary
        raise ValueError(f"unknown estimator {estimator!r}")

    def to_dict(self):
        out = {"dims": dict(self.dims), "rank_H": self.rank_H, "rank_G": self.rank_G}
        out["conditions"] = {k: dict(asdict(c), passed=c.passed, slack=c.slack)
                             for k, c in self.conditions.items()}
        return out

    def format(self):
        lines = ["dims: " + ", ".join(f"{k}={v}" for k, v in self.dims.items()),
                 f"ranks: H={self.rank_H}, G={self.rank_G}"]
        for c in self.conditions.values():
            mark = "ok  " if c.passed else "FAIL"
            lines.append(f"  [{mark}] {c.name:<16} {c.lhs} >= {c.rhs} (slack {c.slack:+d})")
        return "\n".join(lines)


def effective_dims(config):
    """
    ``(M, L, N, K, T)`` as seen by the estimators.

    In the multi-user/multi-BS uplink the pilot dimension becomes ``U*L``
    and the receive dimension ``P*M``; single-link configs are unchanged.
    """
    U, P = getattr(config, "users", 1), getattr(config, "bs_count", 1)
    if U == 1 and P == 1:
        return config.M, config.L, config.N, config.K, config.T
    return U * config.L, P * config.M, config.N, config.K, config.T


def check_design(dims, rank_H=None, rank_G=None):
    """
    Evaluate the estimator design conditions.

    Parameters
    ----------
    dims : SystemConfig or mapping or sequence
        Either a config (multi-user mapping applied), a mapping with keys
        ``M, L, N, K, T``, or the tuple ``(M, L, N, K, T)``.
    rank_H, rank_G : int, optional
        Ranks of ``H`` (N x M) and ``G`` (L x N). Default to full rank.
        For geometric configs the path counts ``R1``/``R2`` are used.

    Returns
    -------
    DesignReport
    """
    if hasattr(dims, "M") and hasattr(dims, "K"):
        if getattr(dims, "channel_model", None) == "geometric":
            rank_H = dims.R1 if rank_H is None else rank_H
            rank_G = dims.R2 if rank_G is None else rank_G
        M, L, N, K, T = effective_dims(dims)
    elif isinstance(dims, dict):
        M, L, N, K, T = (int(dims[k]) for k in "MLNKT")
    else:
        M, L, N, K, T = (int(v) for v in dims)
    if min(M, L, N, K, T) < 1:
        raise ValueError("all dimensions must be positive")
    full_H, full_G = min(M, N), min(L, N)
    rank_H = full_H if rank_H is None else int(rank_H)
    rank_G = full_G if rank_G is None else int(rank_G)
    if not (0 <= rank_H <= full_H and 0 <= rank_G <= full_G):
        raise ValueError("assumed ranks exceed the channel dimensions")

    kN = min(K, N)
    conds = [
        Condition("krf_K", K, N),
        Condition("krf_T", T, M),
        Condition("bals_K", K * min(T, L), N),
        Condition("bals_T", T, M),
        # Khatri-Rao rank bound applied to S kr (X H^T) and S kr G with full-rank channels
        Condition("kr_rank_G", kN + full_H, N + 1),
        Condition("kr_rank_H", kN + full_G, N + 1),
        # the same bound with the assumed (possibly deficient) ranks
        Condition("rank_def_G", kN + rank_H, N + 1),
        Condition("rank_def_H", kN + rank_G, N + 1),
        Condition("kruskal", min(L, N) + min(M, N) + kN, 2 * N + 2),
    ]
    return DesignReport({"M": M, "L": L, "N": N, "K": K, "T": T}, rank_H, rank_G,
                        {c.name: c for c in conds})


def khatri_rao_rank_check(A, B, rtol=None):
    """
    Numerical ranks of ``A``, ``B`` and ``A kr B`` and whether
    ``rank(A kr B) >= min(rank(A) + rank(B) - 1, N)`` holds.

    Returns
    -------
    tuple
        ``(rank_A, rank_B, rank_KR, bound_satisfied)``
    """
    A = np.asarray(A)
    B = np.asarray(B)
    rA = numerical_rank(A, rtol)
    rB = numerical_rank(B, rtol)
    rKR = numerical_rank(khatri_rao(A, B), rtol)
    bound = min(rA + rB - 1, A.shape[1])
    return rA, rB, rKR, rKR >= bound
