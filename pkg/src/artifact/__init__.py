"""Stack-based activated random walks, broken-line flow fields and last-passage percolation."""

__version__ = "0.1.0"
