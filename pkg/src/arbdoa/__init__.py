"""Gridless super-resolution DOA estimation for arbitrary planar arrays."""

__version__ = "0.1.0"
