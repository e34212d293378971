"""Numerical companion for dimension-free maximal function estimates."""

__version__ = "0.1.0"
