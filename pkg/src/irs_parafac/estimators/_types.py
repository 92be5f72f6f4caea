from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class EstimationResult:
    """Output of one channel estimator call.

    ``theta_hat`` is ``vec(H_hat^T kr G_hat)`` whenever both factors are
    present; ``history`` holds ``(G_hat, H_hat)`` per iteration when
    ``BalsOptions.keep_history`` is set.
    """

    theta_hat: np.ndarray
    H_hat: Optional[np.ndarray] = None
    G_hat: Optional[np.ndarray] = None
    S_hat: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = True
    reconstruction_error_trace: list = field(default_factory=list)
    wall_time: float = 0.0
    degenerate_columns: list = field(default_factory=list)
    history: Optional[list] = None


@dataclass(frozen=True)
class BalsOptions:
    """
    Stopping rule and initialisation for the alternating LS estimators.

    Convergence is declared when ``|e(i) - e(i-1)| <= delta``, where ``e`` is
    the squared reconstruction error, divided by ``||Y||^2`` when
    ``normalize_error`` is set. With ``init="provided"`` the iteration starts
    from ``H_init``. ``line_search`` enables extrapolation between sweeps
    (only used by ``tals``).
    """

    delta: float = 1e-5
    max_iter: int = 100
    init: str = "random_gaussian"
    normalize_error: bool = True
    use_orthogonal_fastpath: bool = False
    H_init: Optional[np.ndarray] = None
    keep_history: bool = False
    line_search: bool = False
    restarts: int = 1

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.init not in ("random_gaussian", "provided"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "provided" and self.H_init is None:
            raise ValueError("init='provided' needs H_init")


TALS_DEFAULTS = BalsOptions(delta=1e-6, max_iter=1000, line_search=True, restarts=3)
