"""Simulation and limit theory toolkit for nearly unstable heavy-tailed Hawkes processes."""

__version__ = "0.1.0"
