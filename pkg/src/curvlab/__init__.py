"""Numerical laboratory for Chern curvature of Hermitian and Kähler metrics."""

__version__ = "0.1.0"
