"""Exception types raised across the package."""

import numpy as np


class ColumnMismatch(ValueError):
    """Khatri-Rao operands with different column counts."""


class ShapeMismatch(ValueError):
    """Operands whose shapes are not conformable."""


class ZeroMatrix(ValueError):
    """Rank-1 approximation requested for an all-zero matrix."""


class NoConvergence(np.linalg.LinAlgError):
    """An iterative routine exhausted its iteration budget."""


class InfeasibleDesign(ValueError):
    """Training dimensions violate the conditions an operation needs."""


class RankDeficientDesign(InfeasibleDesign):
    """Pilot or IRS matrix lacks the column rank a linear inverse needs."""


class NonOrthogonalDesign(InfeasibleDesign):
    """Fast path requested but X^H X != T I or S^H S != K I."""


class RankDeficientUpdate(np.linalg.LinAlgError):
    """An alternating LS step hit a column-rank-deficient Khatri-Rao factor."""
