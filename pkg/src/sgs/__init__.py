"""Generalized sampling, SVD-filtered inverse problems and multilevel compressed sensing."""

__version__ = "0.1.0"
