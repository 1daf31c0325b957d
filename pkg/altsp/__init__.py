"""Accelerated life testing sampling plans with piecewise-linear stress links."""

__version__ = "0.1.0"
