"""Vortex sheets, turbulence zones and vortex-blob simulation in two dimensions."""

__version__ = "0.1.0"
