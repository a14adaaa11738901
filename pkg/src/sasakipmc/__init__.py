"""Numerical verification of surfaces with parallel mean curvature in Sasakian space forms."""

__version__ = "0.1.0"
