"""Extremal isosystolic metrics on regular 2n-gons."""

__version__ = "0.1.0"
