"""Pseudo-spectral solver and regularity diagnostics for the periodic magneto-micropolar system."""

__version__ = "0.1.0"
