"""Simulation toolkit for black-hole radiation decoding, superdense decoding and EFI reductions."""

__version__ = "0.1.0"
