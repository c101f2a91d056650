"""Quadratic functions, linking forms and the classification of highly
connected 7- and 15-manifolds."""

__version__ = "0.1.0"
