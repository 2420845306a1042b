"""Rosen and Veech continued-fraction maps, their planar natural extensions and
the comparison between them."""

__version__ = "0.1.0"
