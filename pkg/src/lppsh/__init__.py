"""Stationary last-passage percolation toolkit."""
__version__ = "0.1.0"
