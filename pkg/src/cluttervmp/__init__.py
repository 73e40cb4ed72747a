"""Clutter-map tracking with variational message passing on a basis expansion."""

__version__ = "0.1.0"
