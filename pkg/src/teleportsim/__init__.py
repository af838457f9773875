"""Density-matrix simulation of qubit teleportation under Lindblad damping."""

__version__ = "0.1.0"
