"""Dispersive reformulation of the rotating Euler equations for axisymmetric data."""

__version__ = "0.1.0"
