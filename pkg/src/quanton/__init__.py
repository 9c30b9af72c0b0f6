"""Simulation of small interferometric experiments and l1-norm complementarity measures."""

__version__ = "0.1.0"
