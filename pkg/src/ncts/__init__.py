"""Networked cascade control: synthesis, simulation and analysis."""

__version__ = "0.1.0"
