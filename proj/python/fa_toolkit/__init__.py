"""Fluorescence angiography toolkit: frame classifier, perfusion boundary and saliency."""

from ._core import (
    FaError,
    Model,
    __version__,
    apply_threshold,
    estimate_boundary,
    metrics,
    reconcile_rates,
    synth_dataset,
    synth_frame,
    tile_intervals,
    to_tenths_percent,
)

__all__ = [
    "FaError",
    "Model",
    "__version__",
    "apply_threshold",
    "estimate_boundary",
    "metrics",
    "reconcile_rates",
    "synth_dataset",
    "synth_frame",
    "tile_intervals",
    "to_tenths_percent",
]
