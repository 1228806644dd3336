"""Numerical laboratory for spectrally truncated Dirac geometries."""

__version__ = "0.1.0"
