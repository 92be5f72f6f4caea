"""Tensor-based channel estimation for IRS-assisted MIMO links."""

__version__ = "0.1.0"
