"""Temporal-discriminative video representation learning, C++ core."""

from vtdl._core import (
    Encoder,
    MemoryBank,
    VtdlError,
    frame_difference,
    generate_synthetic,
    negative_start_candidates,
    similarity,
    td_loss,
    tca_mix,
    video_cutout,
)

__all__ = [
    "Encoder",
    "MemoryBank",
    "VtdlError",
    "frame_difference",
    "generate_synthetic",
    "negative_start_candidates",
    "similarity",
    "td_loss",
    "tca_mix",
    "video_cutout",
]
