"""Quantum Fisher information of noisy, partitioned GHZ sensor networks."""

__version__ = "0.1.0"
