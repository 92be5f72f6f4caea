"""Channel estimators for the IRS-assisted PARAFAC signal model."""

from ._types import TALS_DEFAULTS, BalsOptions, EstimationResult
from .alignment import align_scaling, column_scales, match_columns
from .als import bals, bals_orthogonal, tals
from .krf import bilinear_filter, krf
from .linear import block_ls, cascaded_channels, ls_composite

__all__ = [
    "BalsOptions", "EstimationResult", "TALS_DEFAULTS", "align_scaling",
    "bals", "bals_orthogonal", "bilinear_filter", "block_ls",
    "cascaded_channels", "column_scales", "krf", "ls_composite",
    "match_columns", "tals",
]
