"""Simulation and estimation toolkit for color-center nuclear-spin characterization."""
__version__ = "0.1.0"
