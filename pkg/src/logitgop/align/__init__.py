"""Forced alignment and softmax utilities."""

from .core import (
    AlignedSegment,
    Alignment,
    ctc_align,
    kernel_name,
    log_softmax,
    log_softmax_frame,
    min_feasible_frames,
    slice_segment,
)

__all__ = [
    "AlignedSegment",
    "Alignment",
    "ctc_align",
    "kernel_name",
    "log_softmax",
    "log_softmax_frame",
    "min_feasible_frames",
    "slice_segment",
]
