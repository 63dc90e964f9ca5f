"""Quantum grid scoring for structure-based virtual screening, simulated on real statevectors."""

__version__ = "0.1.0"
