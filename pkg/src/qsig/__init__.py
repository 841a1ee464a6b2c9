"""Simulation and audit of Bell-pair state-discrimination signaling protocols."""

__version__ = "0.1.0"
