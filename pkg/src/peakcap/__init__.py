"""Capacity of 2x2 Gaussian MIMO channels under a peak-power constraint."""

__version__ = "0.1.0"
