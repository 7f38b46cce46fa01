"""Spatial multiple hypothesis testing over sensor grids.

Estimates local false discovery rates from sensor p-values (spectral
method-of-moments beta-mixture fit or a beta-uniform MLE baseline), selects
discoveries under FDR control, and extends decisions to sensor-free grid
points by thin-plate-spline interpolation.
"""

from ._spatmht import (
    InsufficientData,
    bfdr_select,
    bh_select,
    fit_lfdr,
    interpolate_lfdr,
    p_to_z,
    simulate,
)

__all__ = [
    "InsufficientData",
    "bfdr_select",
    "bh_select",
    "fit_lfdr",
    "interpolate_lfdr",
    "p_to_z",
    "simulate",
]

__version__ = "0.3.0"
