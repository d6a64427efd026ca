"""Probabilistic Event-B: parsing, simulation, statistical and exact analysis."""

__version__ = "0.1.0"
