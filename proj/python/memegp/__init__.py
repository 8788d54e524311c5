"""Memetic genetic programming for binary image classification."""

from ._core import (
    ConfigError,
    ImageTooSmall,
    ParseError,
    Program,
    convolve,
    grad_check,
    pool,
    sigmoid,
    synth_bright_quadrant,
    train,
)

__all__ = [
    "ConfigError",
    "ImageTooSmall",
    "ParseError",
    "Program",
    "convolve",
    "grad_check",
    "pool",
    "sigmoid",
    "synth_bright_quadrant",
    "train",
]
