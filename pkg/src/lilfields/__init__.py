"""Simulation and verification toolkit for LIL-normalized maximal functions of random fields."""

__version__ = "0.1.0"
