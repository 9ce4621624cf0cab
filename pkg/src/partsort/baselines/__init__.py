"""Comparison partitioners and the line-algorithm model."""

from .ams import ScanResult, ams_partition, ams_probability, ams_scan
from .classic import histogramsort_classic_partition
from .hyksort import hyksort_partition
from .line import LineState, line_cdf, line_rounds_needed, line_simulate, line_tail
from .samplesort import regular_sample, samplesort_partition, samplesort_splitters

__all__ = [
    "LineState", "ScanResult", "ams_partition", "ams_probability", "ams_scan",
    "histogramsort_classic_partition", "hyksort_partition", "line_cdf", "line_rounds_needed",
    "line_simulate", "line_tail", "regular_sample", "samplesort_partition", "samplesort_splitters",
]
