"""Streaming spike sorter: fixed-point band-pass filter, median-threshold
detection, spike-bank localization and O-Sort clustering."""

from .core import (
    ClusterMerge,
    LocalizationMode,
    MedianMode,
    Peak,
    PipelineConfig,
    ProbeGeometry,
    Sample,
    SortedSpike,
    SpikeEvent,
)
from .pipeline import Pipeline, flush, new_pipeline, process_sample

__all__ = [
    "ClusterMerge",
    "LocalizationMode",
    "MedianMode",
    "Peak",
    "Pipeline",
    "PipelineConfig",
    "ProbeGeometry",
    "Sample",
    "SortedSpike",
    "SpikeEvent",
    "flush",
    "new_pipeline",
    "process_sample",
]
