"""Solver toolkit for the chance-constrained set multicover problem."""

__version__ = "0.1.0"
