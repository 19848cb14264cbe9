"""Distributed multi-object tracking with density-peak track-to-track fusion."""

from dmotlab.core import GlobalLabel, LabelledEstimate, NodeEstimateSet, label_compare

__all__ = ["GlobalLabel", "LabelledEstimate", "NodeEstimateSet", "label_compare"]
__version__ = "0.1.0"
