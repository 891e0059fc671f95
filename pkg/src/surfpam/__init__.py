"""Numerical laboratory for the parabolic Anderson model on closed surfaces."""

__version__ = "0.1.0"
