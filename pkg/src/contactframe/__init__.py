"""Numerical workbench for Legendre curves in contact metric manifolds."""

__version__ = "0.1.0"
