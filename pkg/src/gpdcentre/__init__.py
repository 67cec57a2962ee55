"""Finite groupoids, coend calculus, and monoidal centre checks."""

__version__ = "0.1.0"
