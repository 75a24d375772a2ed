"""Fluctuations of spatial averages of random trigonometric polynomials."""

__version__ = "0.1.0"
