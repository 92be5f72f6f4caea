"""Error metrics, Cramer-Rao bounds and design-condition checks."""

from .crb import CrbReport, crb_closed_form, crb_numerical, crb_trace_factor, fisher_matrix
from .identifiability import (LOOSE_RANK_RTOL, Condition, DesignReport, check_design,
                              effective_dims, khatri_rao_rank_check)
from .metrics import db, nmse, snr_db

__all__ = [
    "CrbReport", "Condition", "DesignReport", "LOOSE_RANK_RTOL", "check_design",
    "crb_closed_form", "crb_numerical", "crb_trace_factor", "db", "effective_dims",
    "fisher_matrix", "khatri_rao_rank_check", "nmse", "snr_db",
]
