"""Kerr-nonlinearity mitigation for coherent ground-to-satellite optical uplinks."""

__version__ = "0.1.0"
