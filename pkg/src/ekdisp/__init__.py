"""Euler-Korteweg dispersive toolkit."""

__version__ = "0.1.0"
