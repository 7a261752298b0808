"""Simulation laboratory for vector-valued mean computation in the classical
randomized and the quantum query model."""

__version__ = "0.1.0"
